// SPDX-License-Identifier: Apache-2.0

//! Target bodies, shared with the corpus replay test in `crates/core`.

#![allow(dead_code)]

use std::sync::Arc;

use hgum::codec::{parse_message, sw_deserialize_forward, sw_deserialize_reverse, sw_serialize};
use hgum::rom::encode_rom;
use hgum::schema::{normalize, parse_client_schema, parse_schema, validate_schema};
use hgum::tokens::{parse_ser_tokens, parse_tokens, write_ser_tokens, write_tokens};
use hgum::wire::{decode_frame_header, encode_frame_header};
use hgum::{ClientSchema, DesEngine, DesMode, RomImage, SchemaDef, SchemaTree, WireConfig};

pub const SCHEMA: &str = r#"{
    "Msg":  [["a", ["List", ["Array", ["Struct", "Pair"]]]], ["b", ["Bytes", 4]]],
    "Pair": [["x", ["Bytes", 4]], ["y", ["Bytes", 4]]]
}"#;
pub const CLIENT: &str = r#"{"a.start": 1, "a.elem.start": 2, "a.elem.elem.x": 3,
    "a.elem.elem.y": 4, "a.elem.end": 5, "a.end": 6, "b": 7}"#;

fn fixture() -> (SchemaDef, SchemaTree, ClientSchema) {
    let def = parse_schema(SCHEMA, "Msg").unwrap();
    let tree = normalize(&def).unwrap();
    let client = parse_client_schema(CLIENT, &tree, 32).unwrap();
    (def, tree, client)
}

fn tagged_rom() -> Arc<RomImage> {
    let (_, tree, client) = fixture();
    Arc::new(encode_rom(&tree, Some(&client)))
}

pub fn schema(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(def) = parse_schema(text, "Msg") else { return };
    if !validate_schema(&def).is_empty() {
        assert!(normalize(&def).is_err());
        return;
    }
    let tree = normalize(&def).unwrap();
    assert_eq!(encode_rom(&tree, None).reconstruct(), tree);
    let again = parse_schema(&def.to_json().to_string(), "Msg").unwrap();
    assert_eq!(again, def);
}

pub fn client_schema(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let (_, tree, _) = fixture();
    if let Ok(c) = parse_client_schema(text, &tree, 16) {
        let back = parse_client_schema(&c.to_json().to_string(), &tree, 16).unwrap();
        assert_eq!(back, c);
    }
}

pub fn message(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let (def, _, _) = fixture();
    if let Ok(v) = parse_message(text, &def) {
        let cfg = WireConfig::default();
        let bytes = sw_serialize(&v, &def, &cfg).unwrap();
        assert_eq!(sw_deserialize_forward(&bytes, &def, &cfg).unwrap(), v);
    }
}

pub fn tokens(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = parse_tokens(text) {
        assert_eq!(parse_tokens(&write_tokens(&t)).unwrap(), t);
    }
    if let Ok(t) = parse_ser_tokens(text) {
        assert_eq!(parse_ser_tokens(&write_ser_tokens(&t)).unwrap(), t);
    }
}

/// First byte picks the phit width; the rest is the wire.
fn des(data: &[u8], mode: DesMode) {
    let Some((&sel, wire)) = data.split_first() else { return };
    let phit = [8usize, 16, 32][sel as usize % 3];
    let cfg = WireConfig { phit_bytes: phit, ..WireConfig::default() }.with_frame_phits(1 + (sel as usize >> 2) % 8);
    let rom = tagged_rom();
    let Ok(mut engine) = DesEngine::new(rom.clone(), cfg, mode) else { return };
    for chunk in wire.chunks(phit) {
        let mut p = chunk.to_vec();
        p.resize(phit, 0);
        if engine.feed(&p).is_err() {
            assert!(engine.feed(&p).is_err());
            return;
        }
        assert!(engine.stack_depth() <= rom.max_depth);
    }
    let _ = engine.finish();
}

pub fn des_from_software(data: &[u8]) {
    des(data, DesMode::FromSoftware);
}

pub fn des_from_hardware(data: &[u8]) {
    des(data, DesMode::FromHardware);
}

pub fn frame_header(data: &[u8]) {
    let cfg = WireConfig::default();
    let Ok(h) = decode_frame_header(data, &cfg) else { return };
    assert_eq!(encode_frame_header(h, &cfg).unwrap().as_bytes(), data);
}

pub fn sw_decode(data: &[u8]) {
    let (def, _, _) = fixture();
    let cfg = WireConfig::default();
    if let Ok(v) = sw_deserialize_forward(data, &def, &cfg) {
        assert_eq!(sw_serialize(&v, &def, &cfg).unwrap(), data);
    }
    let _ = sw_deserialize_reverse(data, &def, &cfg);
}
