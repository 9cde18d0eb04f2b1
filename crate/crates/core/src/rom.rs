// SPDX-License-Identifier: Apache-2.0

//! Flat, index-addressed encoding of a schema tree.
//!
//! Siblings occupy consecutive entries, so moving to the next sibling is an
//! index increment. Every container entry stores the index of its first
//! child. Child runs are laid out in pre-order of their parent containers,
//! after the run of top-level fields.

use std::fmt::Write as _;

use crate::schema::{ClientSchema, NodeKind, SchemaNode, SchemaTree, Tag, TokenSlot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RomKind {
    Bytes(usize),
    Array,
    List,
    End,
}

impl RomKind {
    fn label(self) -> &'static str {
        match self {
            RomKind::Bytes(_) => "bytes",
            RomKind::Array => "array",
            RomKind::List => "list",
            RomKind::End => "end",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RomEntry {
    pub kind: RomKind,
    pub name: String,
    pub path: String,
    /// Tag of the array-length / list-begin token.
    pub start_tag: Option<Tag>,
    /// Tag of the data token of a byte field.
    pub data_tag: Option<Tag>,
    /// Tag of the array-end / list-end token.
    pub end_tag: Option<Tag>,
    /// Arrays only: whether an array-end token is emitted.
    pub emit_end: bool,
    pub child_idx: Option<usize>,
    pub last_child: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RomStats {
    pub entry_count: usize,
    pub max_depth: usize,
    pub max_list_depth: usize,
    pub max_leaf_bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RomImage {
    pub entries: Vec<RomEntry>,
    /// Whether the image carries a client schema's tags (deserializer side).
    pub tagged: bool,
    pub max_depth: usize,
    pub max_list_depth: usize,
    pub max_leaf_bytes: usize,
}

/// Index of the first top-level entry.
pub const ROOT_FIRST_IDX: usize = 0;

pub fn encode_rom(tree: &SchemaTree, client: Option<&ClientSchema>) -> RomImage {
    let mut entries = Vec::with_capacity(tree.node_count());
    place_run(&tree.fields, client, &mut entries);
    let mut max_list_depth = 0;
    let mut max_leaf_bytes = 0;
    fn lists(node: &SchemaNode) -> usize {
        let below = node.children.iter().map(lists).max().unwrap_or(0);
        below + usize::from(node.kind == NodeKind::List)
    }
    for node in &tree.fields {
        max_list_depth = max_list_depth.max(lists(node));
    }
    tree.walk(|node, _| {
        if let NodeKind::Bytes(n) = node.kind {
            max_leaf_bytes = max_leaf_bytes.max(n);
        }
    });
    RomImage {
        entries,
        tagged: client.is_some(),
        max_depth: tree.container_depth(),
        max_list_depth,
        max_leaf_bytes,
    }
}

fn place_run(nodes: &[SchemaNode], client: Option<&ClientSchema>, entries: &mut Vec<RomEntry>) -> usize {
    let start = entries.len();
    for (i, node) in nodes.iter().enumerate() {
        entries.push(entry_for(node, client, i + 1 == nodes.len()));
    }
    for (i, node) in nodes.iter().enumerate() {
        if node.kind.is_container() {
            let child = place_run(&node.children, client, entries);
            entries[start + i].child_idx = Some(child);
        }
    }
    start
}

fn entry_for(node: &SchemaNode, client: Option<&ClientSchema>, last_child: bool) -> RomEntry {
    let lookup = |slot| client.and_then(|c| c.tag(&node.token_path(slot)));
    let kind = match node.kind {
        NodeKind::Bytes(n) => RomKind::Bytes(n),
        NodeKind::Array => RomKind::Array,
        NodeKind::List => RomKind::List,
        NodeKind::End => RomKind::End,
    };
    let (start_tag, data_tag, end_tag) = match kind {
        RomKind::Bytes(_) => (None, lookup(TokenSlot::Data), None),
        RomKind::Array | RomKind::List => (lookup(TokenSlot::Start), None, lookup(TokenSlot::End)),
        RomKind::End => (None, None, None),
    };
    RomEntry {
        kind,
        name: node.name.clone(),
        path: node.path.clone(),
        start_tag,
        data_tag,
        emit_end: kind == RomKind::Array && end_tag.is_some(),
        end_tag,
        child_idx: None,
        last_child,
    }
}

impl RomImage {
    pub fn stats(&self) -> RomStats {
        RomStats {
            entry_count: self.entries.len(),
            max_depth: self.max_depth,
            max_list_depth: self.max_list_depth,
            max_leaf_bytes: self.max_leaf_bytes,
        }
    }

    pub fn entry(&self, idx: usize) -> &RomEntry {
        &self.entries[idx]
    }

    /// Rebuilds the schema tree by following child indices and sibling
    /// runs.
    pub fn reconstruct(&self) -> SchemaTree {
        SchemaTree {
            fields: self.read_run(ROOT_FIRST_IDX),
        }
    }

    fn read_run(&self, start: usize) -> Vec<SchemaNode> {
        let mut out = Vec::new();
        let mut idx = start;
        loop {
            let e = &self.entries[idx];
            let kind = match e.kind {
                RomKind::Bytes(n) => NodeKind::Bytes(n),
                RomKind::Array => NodeKind::Array,
                RomKind::List => NodeKind::List,
                RomKind::End => NodeKind::End,
            };
            out.push(SchemaNode {
                kind,
                name: e.name.clone(),
                path: e.path.clone(),
                children: e.child_idx.map(|c| self.read_run(c)).unwrap_or_default(),
            });
            if e.last_child {
                return out;
            }
            idx += 1;
        }
    }

    /// Text dump, one entry per line:
    /// `index kind n=.. start=.. data=.. end=.. child=.. last=.. path`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let st = self.stats();
        let _ = writeln!(
            s,
            "# entries={} max_depth={} max_list_depth={} max_leaf_bytes={}",
            st.entry_count, st.max_depth, st.max_list_depth, st.max_leaf_bytes
        );
        let opt = |t: Option<Tag>| t.map_or("-".to_string(), |t| t.to_string());
        for (i, e) in self.entries.iter().enumerate() {
            let n = match e.kind {
                RomKind::Bytes(n) => n,
                _ => 0,
            };
            let child = e.child_idx.map_or("-".to_string(), |c| c.to_string());
            let path = if e.kind == RomKind::End { "END" } else { e.path.as_str() };
            let _ = writeln!(
                s,
                "{i} {} n={n} start={} data={} end={} emit_end={} child={child} last={} {path}",
                e.kind.label(),
                opt(e.start_tag),
                opt(e.data_tag),
                opt(e.end_tag),
                u8::from(e.emit_end),
                u8::from(e.last_child),
            );
        }
        s
    }
}
