// SPDX-License-Identifier: Apache-2.0

//! Random (schema, client schema, message) triples for integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use hgum::schema::{normalize, Field, NodeKind, TokenSlot};
use hgum::{ClientSchema, MessageValue, SchemaDef, SchemaTree, TypeExpr};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MAX_CONTAINER_DEPTH: usize = 4;
pub const MAX_LEN: usize = 64;
pub const MAX_LEAF: usize = 32;

pub struct Case {
    pub def: SchemaDef,
    pub tree: SchemaTree,
    pub client: ClientSchema,
    pub value: MessageValue,
}

struct Gen {
    rng: ChaCha8Rng,
    def: SchemaDef,
    next_struct: usize,
}

impl Gen {
    fn ty(&mut self, containers: usize, struct_nesting: usize) -> TypeExpr {
        let roll = self.rng.gen_range(0..100);
        if containers >= MAX_CONTAINER_DEPTH {
            return if roll < 75 || struct_nesting >= 2 {
                self.bytes()
            } else {
                self.new_struct(containers, struct_nesting + 1)
            };
        }
        match roll {
            0..=39 => self.bytes(),
            40..=54 if struct_nesting < 2 => self.new_struct(containers, struct_nesting + 1),
            40..=69 => TypeExpr::array(self.ty(containers + 1, struct_nesting)),
            _ => TypeExpr::list(self.ty(containers + 1, struct_nesting)),
        }
    }

    fn bytes(&mut self) -> TypeExpr {
        TypeExpr::Bytes(self.rng.gen_range(1..=MAX_LEAF))
    }

    fn new_struct(&mut self, containers: usize, struct_nesting: usize) -> TypeExpr {
        let name = format!("S{}", self.next_struct);
        self.next_struct += 1;
        let n = self.rng.gen_range(1..=3);
        let fields = (0..n)
            .map(|i| Field::new(format!("f{i}"), self.ty(containers, struct_nesting)))
            .collect();
        self.def.structs.insert(name.clone(), fields);
        TypeExpr::Struct(name)
    }

    fn value(&mut self, ty: &TypeExpr, budget: usize) -> MessageValue {
        match ty {
            TypeExpr::Bytes(n) => MessageValue::Bytes((0..*n).map(|_| self.rng.gen()).collect()),
            TypeExpr::Struct(name) => {
                let fields = self.def.structs[name].clone();
                MessageValue::Struct(fields.iter().map(|f| self.value(&f.ty, budget)).collect())
            }
            TypeExpr::Array(elem) | TypeExpr::List(elem) => {
                let cap = budget.min(MAX_LEN);
                let len = if self.rng.gen_bool(0.15) {
                    self.rng.gen_range(0..=cap)
                } else {
                    self.rng.gen_range(0..=cap.min(3))
                };
                let inner = (budget / len.max(1)).max(1);
                let items = (0..len).map(|_| self.value(elem, inner)).collect();
                if matches!(ty, TypeExpr::Array(_)) {
                    MessageValue::Array(items)
                } else {
                    MessageValue::List(items)
                }
            }
        }
    }
}

/// Random tags drawn from a small pool (so some repeat), array end tokens
/// switched on at random.
pub fn random_client(tree: &SchemaTree, rng: &mut impl Rng) -> ClientSchema {
    let bits: u32 = [8, 16, 32, 64][rng.gen_range(0..4)];
    let pool: Vec<u64> = (0..8)
        .map(|_| if bits == 64 { rng.gen() } else { rng.gen_range(0..1u64 << bits) })
        .collect();
    let mut tags = BTreeMap::new();
    for (path, node, slot) in tree.token_paths() {
        if node.kind == NodeKind::Array && slot == TokenSlot::End && rng.gen_bool(0.5) {
            continue;
        }
        let tag = if rng.gen_bool(0.3) {
            pool[rng.gen_range(0..pool.len())]
        } else if bits == 64 {
            rng.gen()
        } else {
            rng.gen_range(0..1u64 << bits)
        };
        tags.insert(path, tag);
    }
    ClientSchema::new(tags, tree, bits).expect("every mandatory path tagged")
}

pub fn random_case(seed: u64) -> Case {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        def: SchemaDef::new("Msg"),
        next_struct: 0,
    };
    let n = if g.rng.gen_bool(0.02) { 0 } else { g.rng.gen_range(1..=4) };
    let fields: Vec<Field> = (0..n).map(|i| Field::new(format!("m{i}"), g.ty(0, 0))).collect();
    g.def.structs.insert("Msg".into(), fields);
    let value = g.value(&TypeExpr::Struct("Msg".into()), 256);
    let tree = normalize(&g.def).expect("generated schemas are valid");
    let client = random_client(&tree, &mut g.rng);
    Case {
        def: g.def,
        tree,
        client,
        value,
    }
}

pub fn int(x: u32) -> MessageValue {
    MessageValue::Bytes(x.to_le_bytes().to_vec())
}

pub const PAIR_SCHEMA: &str = r#"{
    "Msg":  [["a", ["List", ["Array", ["Struct", "Pair"]]]], ["b", ["Bytes", 4]]],
    "Pair": [["x", ["Bytes", 4]], ["y", ["Bytes", 4]]]
}"#;

pub const PAIR_TAGS: &str = r#"{"a.start": 1, "a.elem.start": 2, "a.elem.elem.x": 3,
    "a.elem.elem.y": 4, "a.elem.end": 5, "a.end": 6, "b": 7}"#;

/// a = [[(1,2),(3,4)]], b = 5
pub fn pair_message() -> MessageValue {
    MessageValue::Struct(vec![
        MessageValue::List(vec![MessageValue::Array(vec![
            MessageValue::Struct(vec![int(1), int(2)]),
            MessageValue::Struct(vec![int(3), int(4)]),
        ])]),
        int(5),
    ])
}
