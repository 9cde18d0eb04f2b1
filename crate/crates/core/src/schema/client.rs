// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde_json::Value;

use super::tree::{NodeKind, SchemaTree, TokenSlot};
use super::SchemaError;

pub const DEFAULT_TAG_BITS: u32 = 32;

/// User-assigned token tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tag(pub u64);

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A tagging scheme for one deserializer instance.
///
/// Byte fields, container `start` tokens and list `end` tokens must all be
/// tagged. An array `end` entry is optional; its presence turns on
/// array-end emission for that array. Tag values may repeat.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientSchema {
    tags: BTreeMap<String, Tag>,
    tag_bits: u32,
}

impl ClientSchema {
    /// Validates a path→tag map against `tree`.
    pub fn new(
        tags: BTreeMap<String, u64>,
        tree: &SchemaTree,
        tag_bits: u32,
    ) -> Result<Self, SchemaError> {
        assert!((1..=64).contains(&tag_bits), "tag width must be 1..=64 bits");
        let known: HashMap<String, (NodeKind, TokenSlot)> = tree
            .token_paths()
            .into_iter()
            .map(|(p, node, slot)| (p, (node.kind, slot)))
            .collect();
        let mut out = BTreeMap::new();
        for (path, value) in tags {
            if !known.contains_key(&path) {
                return Err(SchemaError::UnknownPath(path));
            }
            if tag_bits < 64 && value >> tag_bits != 0 {
                return Err(SchemaError::TagOverflow {
                    path,
                    value,
                    bits: tag_bits,
                });
            }
            out.insert(path, Tag(value));
        }
        for (path, node, slot) in tree.token_paths() {
            let mandatory = !(node.kind == NodeKind::Array && slot == TokenSlot::End);
            if mandatory && !out.contains_key(&path) {
                return Err(SchemaError::MissingMandatoryTag(path));
            }
        }
        Ok(ClientSchema { tags: out, tag_bits })
    }

    /// Assigns tags 0, 1, 2, ... to every token in tree order. Array `end`
    /// tokens are included only when `array_ends` is set.
    pub fn sequential(tree: &SchemaTree, array_ends: bool) -> Self {
        let mut tags = BTreeMap::new();
        let mut next = 0u64;
        for (path, node, slot) in tree.token_paths() {
            if node.kind == NodeKind::Array && slot == TokenSlot::End && !array_ends {
                continue;
            }
            tags.insert(path, next);
            next += 1;
        }
        Self::new(tags, tree, 64).expect("sequential tags cover every mandatory token")
    }

    pub fn tag(&self, path: &str) -> Option<Tag> {
        self.tags.get(path).copied()
    }

    pub fn tag_bits(&self) -> u32 {
        self.tag_bits
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, Tag)> {
        self.tags.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn to_json(&self) -> Value {
        Value::Object(
            self.tags
                .iter()
                .map(|(k, v)| (k.clone(), Value::from(v.0)))
                .collect(),
        )
    }
}

/// Parses a flat `{"path": tag, ...}` JSON object and validates it against
/// `tree`.
pub fn parse_client_schema(
    tags_text: &str,
    tree: &SchemaTree,
    tag_bits: u32,
) -> Result<ClientSchema, SchemaError> {
    let doc: Value =
        serde_json::from_str(tags_text).map_err(|e| SchemaError::MalformedJson(e.to_string()))?;
    let Value::Object(map) = doc else {
        return Err(SchemaError::GrammarViolation {
            path: "$".into(),
            reason: "client schema must be a JSON object".into(),
        });
    };
    let mut tags = BTreeMap::new();
    for (path, value) in map {
        let Some(v) = value.as_u64() else {
            return Err(SchemaError::GrammarViolation {
                path,
                reason: "tag must be a non-negative integer".into(),
            });
        };
        tags.insert(path, v);
    }
    ClientSchema::new(tags, tree, tag_bits)
}

impl ClientSchema {
    pub fn parse(tags_text: &str, tree: &SchemaTree, tag_bits: u32) -> Result<Self, SchemaError> {
        parse_client_schema(tags_text, tree, tag_bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{normalize, parse_schema};

    const PAIR_SCHEMA: &str = r#"{
        "Msg":  [["a", ["List", ["Array", ["Struct", "Pair"]]]], ["b", ["Bytes", 4]]],
        "Pair": [["x", ["Bytes", 4]], ["y", ["Bytes", 4]]]
    }"#;
    const PAIR_TAGS: &str = r#"{"a.start": 1, "a.elem.start": 2, "a.elem.elem.x": 3,
        "a.elem.elem.y": 4, "a.elem.end": 5, "a.end": 6, "b": 7}"#;

    fn tree() -> SchemaTree {
        normalize(&parse_schema(PAIR_SCHEMA, "Msg").unwrap()).unwrap()
    }

    #[test]
    fn full_tag_map_accepted() {
        let client = parse_client_schema(PAIR_TAGS, &tree(), DEFAULT_TAG_BITS).unwrap();
        assert_eq!(client.tag("a.start"), Some(Tag(1)));
        assert_eq!(client.tag("a.elem.end"), Some(Tag(5)));
        assert_eq!(client.tag("b"), Some(Tag(7)));
    }

    #[test]
    fn array_end_is_optional() {
        let text = PAIR_TAGS.replace(r#""a.elem.end": 5,"#, "");
        let client = parse_client_schema(&text, &tree(), DEFAULT_TAG_BITS).unwrap();
        assert_eq!(client.tag("a.elem.end"), None);
    }

    #[test]
    fn list_end_is_mandatory() {
        let text = PAIR_TAGS.replace(r#", "a.end": 6"#, "");
        assert_eq!(
            parse_client_schema(&text, &tree(), DEFAULT_TAG_BITS),
            Err(SchemaError::MissingMandatoryTag("a.end".into()))
        );
    }

    #[test]
    fn unknown_path_and_overflow() {
        let text = PAIR_TAGS.replace("\"b\"", "\"c\"");
        assert_eq!(
            parse_client_schema(&text, &tree(), DEFAULT_TAG_BITS),
            Err(SchemaError::UnknownPath("c".into()))
        );
        let text = PAIR_TAGS.replace("\"b\": 7", "\"b\": 256");
        assert!(matches!(
            parse_client_schema(&text, &tree(), 8),
            Err(SchemaError::TagOverflow { value: 256, bits: 8, .. })
        ));
        assert!(parse_client_schema(&text, &tree(), 9).is_ok());
    }

    #[test]
    fn non_integer_tags_rejected() {
        let text = PAIR_TAGS.replace("\"b\": 7", "\"b\": \"7\"");
        assert!(matches!(
            parse_client_schema(&text, &tree(), DEFAULT_TAG_BITS),
            Err(SchemaError::GrammarViolation { .. })
        ));
    }

    #[test]
    fn shared_tag_values_allowed() {
        let text = PAIR_TAGS.replace("\"b\": 7", "\"b\": 3");
        assert!(parse_client_schema(&text, &tree(), DEFAULT_TAG_BITS).is_ok());
    }

    #[test]
    fn sequential_scheme() {
        let t = tree();
        let with = ClientSchema::sequential(&t, true);
        let without = ClientSchema::sequential(&t, false);
        assert_eq!(with.entries().count(), 7);
        assert_eq!(without.entries().count(), 6);
        assert!(without.tag("a.elem.end").is_none());
    }
}
