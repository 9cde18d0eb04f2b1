// SPDX-License-Identifier: Apache-2.0

//! Normalization of a [`SchemaDef`] into a schema tree.
//!
//! Two rewrites are applied. Every array or list element that is not a
//! struct is wrapped in a one-field struct, and every struct-typed field is
//! replaced by its own fields. What remains is a tree whose leaves are byte
//! fields and whose internal nodes are arrays and lists, closed by a single
//! `END` node as the last top-level child.
//!
//! Token paths are dot-joined: the top-level field name, then the literal
//! `elem` for each container level, then either the inlined leaf field path
//! or one of the keywords `start` / `end`. A wrapped scalar element is
//! named `value`; a wrapped container element contributes no path
//! component, so the inner array of `List<Array<T>>` field `a` is addressed
//! as `a.elem.start`.

use super::{validate_schema, SchemaDef, SchemaError, TypeExpr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Bytes(usize),
    Array,
    List,
    End,
}

impl NodeKind {
    pub fn is_container(self) -> bool {
        matches!(self, NodeKind::Array | NodeKind::List)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaNode {
    pub kind: NodeKind,
    /// Path component relative to the parent element (inlined struct fields
    /// are joined with `.`; empty for a wrapped container element).
    pub name: String,
    /// Full token path of this node.
    pub path: String,
    pub children: Vec<SchemaNode>,
}

impl SchemaNode {
    fn leaf(n: usize, name: String, path: String) -> Self {
        SchemaNode {
            kind: NodeKind::Bytes(n),
            name,
            path,
            children: Vec::new(),
        }
    }

    fn end() -> Self {
        SchemaNode {
            kind: NodeKind::End,
            name: "END".into(),
            path: String::new(),
            children: Vec::new(),
        }
    }

    /// Path of the start / end token of a container.
    pub fn token_path(&self, slot: TokenSlot) -> String {
        match slot {
            TokenSlot::Data => self.path.clone(),
            TokenSlot::Start => join(&self.path, "start"),
            TokenSlot::End => join(&self.path, "end"),
        }
    }

    fn walk<'a>(&'a self, depth: usize, f: &mut impl FnMut(&'a SchemaNode, usize)) {
        f(self, depth);
        for child in &self.children {
            child.walk(depth + 1, f);
        }
    }
}

/// Which token of a node a client-schema path addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenSlot {
    Data,
    Start,
    End,
}

/// Normalized schema: the ordered children of the synthetic root. The last
/// element is always the `END` node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaTree {
    pub fields: Vec<SchemaNode>,
}

impl SchemaTree {
    /// Pre-order walk over every node with its depth below the root (top
    /// level fields are at depth 1).
    pub fn walk<'a>(&'a self, mut f: impl FnMut(&'a SchemaNode, usize)) {
        for node in &self.fields {
            node.walk(1, &mut f);
        }
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.walk(|_, _| n += 1);
        n
    }

    /// Maximum number of container nodes on any root-to-leaf path.
    pub fn container_depth(&self) -> usize {
        fn go(node: &SchemaNode) -> usize {
            let below = node.children.iter().map(go).max().unwrap_or(0);
            below + usize::from(node.kind.is_container())
        }
        self.fields.iter().map(go).max().unwrap_or(0)
    }

    /// Every (path, node, slot) triple a client schema may address, in tree
    /// order.
    pub fn token_paths(&self) -> Vec<(String, &SchemaNode, TokenSlot)> {
        let mut out = Vec::new();
        self.walk(|node, _| match node.kind {
            NodeKind::Bytes(_) => out.push((node.token_path(TokenSlot::Data), node, TokenSlot::Data)),
            NodeKind::Array | NodeKind::List => {
                out.push((node.token_path(TokenSlot::Start), node, TokenSlot::Start));
                out.push((node.token_path(TokenSlot::End), node, TokenSlot::End));
            }
            NodeKind::End => {}
        });
        out
    }
}

/// Builds the schema tree. Fails with [`SchemaError::Invalid`] when
/// [`validate_schema`] reports anything.
pub fn normalize(def: &SchemaDef) -> Result<SchemaTree, SchemaError> {
    let report = validate_schema(def);
    if !report.is_empty() {
        return Err(SchemaError::Invalid(report));
    }
    let mut fields = Vec::new();
    expand_struct(def, &def.message_name, "", "", &mut fields);
    fields.push(SchemaNode::end());
    Ok(SchemaTree { fields })
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    match (prefix.is_empty(), name.is_empty()) {
        (true, _) => name.to_string(),
        (_, true) => prefix.to_string(),
        _ => format!("{prefix}.{name}"),
    }
}

fn expand_struct(
    def: &SchemaDef,
    struct_name: &str,
    name_prefix: &str,
    path_prefix: &str,
    out: &mut Vec<SchemaNode>,
) {
    let fields = def
        .struct_fields(struct_name)
        .expect("validated schema resolves every struct");
    for field in fields {
        let name = join(name_prefix, &field.name);
        match &field.ty {
            TypeExpr::Struct(inner) => expand_struct(def, inner, &name, path_prefix, out),
            ty => out.push(expand_field(def, ty, name.clone(), join(path_prefix, &name))),
        }
    }
}

fn expand_field(def: &SchemaDef, ty: &TypeExpr, name: String, path: String) -> SchemaNode {
    match ty {
        TypeExpr::Bytes(n) => SchemaNode::leaf(*n, name, path),
        TypeExpr::Array(elem) | TypeExpr::List(elem) => {
            let elem_prefix = join(&path, "elem");
            let children = expand_element(def, elem, &elem_prefix);
            SchemaNode {
                kind: if matches!(ty, TypeExpr::Array(_)) {
                    NodeKind::Array
                } else {
                    NodeKind::List
                },
                name,
                path,
                children,
            }
        }
        TypeExpr::Struct(_) => unreachable!("structs are inlined by the caller"),
    }
}

fn expand_element(def: &SchemaDef, elem: &TypeExpr, elem_prefix: &str) -> Vec<SchemaNode> {
    match elem {
        TypeExpr::Struct(name) => {
            let mut out = Vec::new();
            expand_struct(def, name, "", elem_prefix, &mut out);
            out
        }
        TypeExpr::Bytes(n) => vec![SchemaNode::leaf(
            *n,
            "value".into(),
            join(elem_prefix, "value"),
        )],
        container => vec![expand_field(def, container, String::new(), elem_prefix.to_string())],
    }
}
