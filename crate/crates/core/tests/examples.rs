// SPDX-License-Identifier: Apache-2.0

//! Worked examples for each public operation.

mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use common::{pair_message, int, PAIR_SCHEMA, PAIR_TAGS};
use hgum::codec::{
    adapt_tokens, oracle_tokenize, sw_deserialize_forward, sw_deserialize_reverse, sw_serialize, CodecError,
};
use hgum::rom::{encode_rom, RomKind, RomStats};
use hgum::schema::{
    check_message, normalize, parse_client_schema, parse_schema, validate_schema, Field, NodeKind,
    ViolationKind,
};
use hgum::sim::{run_des, run_loopback, run_ser, sweep, CycleModel, SweepKind};
use hgum::wire::{decode_frame_header, decode_length, encode_frame_header, encode_length, pack, unpack};
use hgum::{
    ClientSchema, DesEngine, DesError, DesMode, FrameHeader, MessageValue, Phit, SchemaDef, SchemaError,
    SerEngine, SerError, SerMode, SerToken, Tag, Token, TokenKind, TypeExpr, WireConfig, WireError,
};

fn pair() -> SchemaDef {
    parse_schema(PAIR_SCHEMA, "Msg").unwrap()
}

fn pair_tags(def: &SchemaDef) -> ClientSchema {
    parse_client_schema(PAIR_TAGS, &normalize(def).unwrap(), 32).unwrap()
}

/// `{a: Bytes(2), b: Bytes(2), c: Bytes(4)}` with tags 0, 1, 2.
fn three_fields() -> (SchemaDef, ClientSchema) {
    let def = SchemaDef::new("M").with_struct(
        "M",
        vec![
            Field::new("a", TypeExpr::Bytes(2)),
            Field::new("b", TypeExpr::Bytes(2)),
            Field::new("c", TypeExpr::Bytes(4)),
        ],
    );
    let tree = normalize(&def).unwrap();
    let tags = [("a", 0), ("b", 1), ("c", 2)].map(|(p, t)| (p.to_string(), t));
    let client = ClientSchema::new(BTreeMap::from(tags), &tree, 32).unwrap();
    (def, client)
}

fn single(name: &str, ty: TypeExpr) -> SchemaDef {
    SchemaDef::new("M").with_struct("M", vec![Field::new(name, ty)])
}

fn cfg4() -> WireConfig {
    WireConfig {
        phit_bytes: 4,
        ..WireConfig::default()
    }
}

fn data(tag: u64, bytes: &[u8]) -> Token {
    Token::new(Tag(tag), TokenKind::Data(bytes.to_vec()))
}

#[test]
fn parse_schema_examples() {
    let def = pair();
    assert_eq!(def.message_name, "Msg");
    assert_eq!(def.structs.len(), 2);
    assert_eq!(
        def.message_fields().unwrap(),
        &[
            Field::new("a", TypeExpr::list(TypeExpr::array(TypeExpr::Struct("Pair".into())))),
            Field::new("b", TypeExpr::Bytes(4)),
        ]
    );

    let m = parse_schema(r#"{"M": [["f", ["Bytes", 4]]]}"#, "M").unwrap();
    assert_eq!(m, single("f", TypeExpr::Bytes(4)));

    assert!(matches!(
        parse_schema(r#"{"M": [["f", ["Bytes", 0]]]}"#, "M"),
        Err(SchemaError::GrammarViolation { .. })
    ));
}

#[test]
fn validate_schema_examples() {
    assert!(validate_schema(&pair()).is_empty());
    let rec = parse_schema(r#"{"M": [["f", ["Struct", "M"]]]}"#, "M").unwrap();
    assert!(validate_schema(&rec).has(|k| matches!(k, ViolationKind::RecursiveStruct(_))));
    let dangling = parse_schema(r#"{"M": [["f", ["Struct", "Nope"]]]}"#, "M").unwrap();
    assert!(validate_schema(&dangling).has(|k| matches!(k, ViolationKind::UnresolvedStructRef(_))));
}

#[test]
fn normalize_examples() {
    let tree = normalize(&pair()).unwrap();
    let top: Vec<_> = tree.fields.iter().map(|n| (n.name.as_str(), n.kind)).collect();
    assert_eq!(top, [("a", NodeKind::List), ("b", NodeKind::Bytes(4)), ("END", NodeKind::End)]);
    let elem = &tree.fields[0].children[0];
    assert_eq!(elem.kind, NodeKind::Array);
    let pair: Vec<_> = elem.children.iter().map(|n| n.name.as_str()).collect();
    assert_eq!(pair, ["x", "y"]);

    let tree = normalize(&single("f", TypeExpr::list(TypeExpr::Bytes(4)))).unwrap();
    let f = &tree.fields[0];
    assert_eq!(f.kind, NodeKind::List);
    assert_eq!(f.children.len(), 1);
    assert_eq!((f.children[0].name.as_str(), f.children[0].kind), ("value", NodeKind::Bytes(4)));

    let nested = SchemaDef::new("M")
        .with_struct("M", vec![Field::new("p", TypeExpr::Struct("P".into()))])
        .with_struct("P", vec![Field::new("q", TypeExpr::Bytes(2))]);
    let tree = normalize(&nested).unwrap();
    assert_eq!(tree.fields[0].name, "p.q");
    assert_eq!(tree.fields[0].kind, NodeKind::Bytes(2));
    assert_eq!(tree.fields.len(), 2);
}

#[test]
fn client_schema_examples() {
    let def = pair();
    let tree = normalize(&def).unwrap();
    let client = parse_client_schema(PAIR_TAGS, &tree, 32).unwrap();
    assert_eq!(client.tag("a.elem.end"), Some(Tag(5)));
    assert!(encode_rom(&tree, Some(&client)).entries[3].emit_end);

    let without_array_end = PAIR_TAGS.replace(r#""a.elem.end": 5, "#, "");
    let client = parse_client_schema(&without_array_end, &tree, 32).unwrap();
    assert!(!encode_rom(&tree, Some(&client)).entries[3].emit_end);

    let without_list_end = PAIR_TAGS.replace(r#""a.end": 6, "#, "");
    assert_eq!(
        parse_client_schema(&without_list_end, &tree, 32),
        Err(SchemaError::MissingMandatoryTag("a.end".into()))
    );
}

#[test]
fn check_message_examples() {
    let def = pair();
    let pair = |x, y| MessageValue::Struct(vec![int(x), int(y)]);
    let ok = MessageValue::Struct(vec![
        MessageValue::List(vec![MessageValue::Array(vec![pair(1, 2), pair(3, 4)])]),
        int(4),
    ]);
    assert!(check_message(&ok, &def).is_empty());

    let short = MessageValue::Struct(vec![MessageValue::List(vec![]), MessageValue::Bytes(vec![1, 2, 3])]);
    assert!(check_message(&short, &def).has(|k| matches!(k, ViolationKind::LengthMismatch { expected: 4, actual: 3 })));

    let mixed = MessageValue::Struct(vec![
        MessageValue::List(vec![MessageValue::Array(vec![pair(1, 2), int(3)])]),
        int(4),
    ]);
    assert!(check_message(&mixed, &def).has(|k| *k == ViolationKind::HeterogeneousElements));
}

#[test]
fn encode_rom_examples() {
    let def = pair();
    let tree = normalize(&def).unwrap();
    let rom = encode_rom(&tree, Some(&pair_tags(&def)));
    let shape: Vec<_> = rom.entries.iter().map(|e| (e.kind, e.child_idx, e.last_child)).collect();
    assert_eq!(
        shape,
        [
            (RomKind::List, Some(3), false),
            (RomKind::Bytes(4), None, false),
            (RomKind::End, None, true),
            (RomKind::Array, Some(4), true),
            (RomKind::Bytes(4), None, false),
            (RomKind::Bytes(4), None, true),
        ]
    );
    let e = &rom.entries;
    assert_eq!((e[0].start_tag, e[0].end_tag), (Some(Tag(1)), Some(Tag(6))));
    assert_eq!((e[3].start_tag, e[3].emit_end, e[3].end_tag), (Some(Tag(2)), true, Some(Tag(5))));
    assert_eq!((e[4].data_tag, e[5].data_tag, e[1].data_tag), (Some(Tag(3)), Some(Tag(4)), Some(Tag(7))));

    let rom = encode_rom(&normalize(&single("f", TypeExpr::Bytes(2))).unwrap(), None);
    assert_eq!(rom.entries.len(), 2);
    assert!(!rom.entries[0].last_child);
    assert_eq!(rom.entries[1].kind, RomKind::End);

    let bare = encode_rom(&tree, None);
    assert_eq!(
        bare.entries.iter().map(|e| (e.kind, e.child_idx, e.last_child)).collect::<Vec<_>>(),
        shape
    );
    assert!(bare
        .entries
        .iter()
        .all(|e| e.start_tag.is_none() && e.data_tag.is_none() && e.end_tag.is_none() && !e.emit_end));
}

#[test]
fn rom_stats_examples() {
    let stats = |def: &SchemaDef| encode_rom(&normalize(def).unwrap(), None).stats();
    let s = |entry_count, max_depth, max_list_depth, max_leaf_bytes| RomStats {
        entry_count,
        max_depth,
        max_list_depth,
        max_leaf_bytes,
    };
    assert_eq!(stats(&pair()), s(6, 2, 1, 4));
    assert_eq!(stats(&single("f", TypeExpr::Bytes(2))), s(2, 0, 0, 2));
    let deep = TypeExpr::list(TypeExpr::list(TypeExpr::list(TypeExpr::Bytes(1))));
    assert_eq!(stats(&single("f", deep)), s(5, 3, 3, 1));
}

#[test]
fn pack_examples() {
    let phits = pack(&hex::decode("34127856efbeadde").unwrap(), 4);
    let rendered: Vec<_> = phits.iter().map(Phit::to_le_hex).collect();
    assert_eq!(rendered, ["0x56781234", "0xdeadbeef"]);
    assert!(pack(&[], 4).is_empty());
    let p = pack(&[1, 2, 3, 4, 0xb4], 4);
    assert_eq!(p.len(), 2);
    assert_eq!(p[1].as_bytes(), &[0xb4, 0, 0, 0]);
    assert_eq!(unpack(&p, 5).unwrap(), [1, 2, 3, 4, 0xb4]);
    assert!(matches!(unpack(&p, 9), Err(WireError::BadLength { .. })));
}

#[test]
fn length_examples() {
    assert_eq!(encode_length(2, 4).unwrap(), [2, 0, 0, 0]);
    assert_eq!(encode_length(0, 4).unwrap(), [0, 0, 0, 0]);
    assert!(matches!(encode_length(1 << 32, 4), Err(WireError::LengthOverflow { .. })));
    assert_eq!(decode_length(&[2, 0, 0, 0]), 2);
}

#[test]
fn frame_header_examples() {
    let cfg = WireConfig::default();
    let h = encode_frame_header(FrameHeader { payload_bytes: 8000, list_level: 1 }, &cfg).unwrap();
    let mut want = vec![0x40, 0x1f, 0, 0, 1];
    want.extend([0; 11]);
    assert_eq!(h.as_bytes(), &want[..]);

    let empty = encode_frame_header(FrameHeader::end_of_list(2), &cfg).unwrap();
    let back = decode_frame_header(empty.as_bytes(), &cfg).unwrap();
    assert!(back.is_end_of_list());
    assert_eq!(back.list_level, 2);

    let mut bad = want.clone();
    bad[5] = 1;
    assert!(matches!(decode_frame_header(&bad, &cfg), Err(WireError::MalformedHeader(_))));
}

#[test]
fn des_new_examples() {
    let def = pair();
    let rom = Arc::new(encode_rom(&normalize(&def).unwrap(), Some(&pair_tags(&def))));
    let des = DesEngine::new(rom, WireConfig::default(), DesMode::FromSoftware).unwrap();
    assert!(!des.is_done());
    assert_eq!(des.stack_depth(), 0);

    let mut ty = TypeExpr::Bytes(1);
    for _ in 0..20 {
        ty = TypeExpr::array(ty);
    }
    let tree = normalize(&single("f", ty)).unwrap();
    let client = ClientSchema::sequential(&tree, false);
    let deep = encode_rom(&tree, Some(&client));
    assert_eq!(deep.max_depth, 20);
    assert!(matches!(
        DesEngine::new(deep, WireConfig::default(), DesMode::FromSoftware),
        Err(DesError::ConfigMismatch(_))
    ));

    let empty = SchemaDef::new("M").with_struct("M", vec![]);
    let tree = normalize(&empty).unwrap();
    let client = ClientSchema::sequential(&tree, false);
    let des = DesEngine::new(encode_rom(&tree, Some(&client)), WireConfig::default(), DesMode::FromSoftware).unwrap();
    assert!(des.is_done());
}

#[test]
fn des_feed_and_finish_examples() {
    let (def, client) = three_fields();
    let rom = Arc::new(encode_rom(&normalize(&def).unwrap(), Some(&client)));
    let mut des = DesEngine::new(rom.clone(), cfg4(), DesMode::FromSoftware).unwrap();
    assert_eq!(
        des.feed(&[0x34, 0x12, 0x78, 0x56]).unwrap(),
        [data(0, &[0x34, 0x12]), data(1, &[0x78, 0x56])]
    );
    assert!(matches!(des.finish(), Err(DesError::IncompleteMessage { .. })));
    assert_eq!(des.feed(&[0xef, 0xbe, 0xad, 0xde]).unwrap(), [data(2, &[0xef, 0xbe, 0xad, 0xde])]);
    let s = des.finish().unwrap();
    assert_eq!((s.done, s.tokens_emitted, s.bytes_consumed), (true, 3, 8));

    // Token order for the two-level message.
    let def = pair();
    let client = pair_tags(&def);
    let rom = Arc::new(encode_rom(&normalize(&def).unwrap(), Some(&client)));
    let cfg = WireConfig::default();
    let bytes = sw_serialize(&pair_message(), &def, &cfg).unwrap();
    let run = run_des(&rom, cfg, DesMode::FromSoftware, &pack(&bytes, 16)).unwrap();
    let tags: Vec<u64> = run.tokens.iter().map(|t| t.tag.0).collect();
    assert_eq!(tags, [1, 2, 3, 4, 3, 4, 5, 6, 7]);
    assert_eq!(run.tokens[0].kind, TokenKind::ListBegin);
    assert_eq!(run.tokens[1].kind, TokenKind::ArrayLength(2));
    assert_eq!(run.tokens[6].kind, TokenKind::ArrayEnd);
    assert_eq!(run.tokens[7].kind, TokenKind::ListEnd);

    // Empty list over the framed link.
    let def = single("f", TypeExpr::list(TypeExpr::Bytes(16)));
    let tree = normalize(&def).unwrap();
    let client = ClientSchema::sequential(&tree, false);
    let rom = Arc::new(encode_rom(&tree, Some(&client)));
    let header = encode_frame_header(FrameHeader::end_of_list(1), &cfg).unwrap();
    let run = run_des(&rom, cfg, DesMode::FromHardware, &[header]).unwrap();
    let kinds: Vec<_> = run.tokens.iter().map(|t| t.kind.clone()).collect();
    assert_eq!(kinds, [TokenKind::ListBegin, TokenKind::ListEnd]);

    // Empty schema.
    let empty = SchemaDef::new("M").with_struct("M", vec![]);
    let tree = normalize(&empty).unwrap();
    let client = ClientSchema::sequential(&tree, false);
    let des = DesEngine::new(encode_rom(&tree, Some(&client)), cfg, DesMode::FromSoftware).unwrap();
    let s = des.finish().unwrap();
    assert_eq!((s.done, s.tokens_emitted, s.bytes_consumed), (true, 0, 0));
}

#[test]
fn ser_new_examples() {
    let tree = normalize(&pair()).unwrap();
    let ser = SerEngine::new(encode_rom(&tree, None), WireConfig::default(), SerMode::ToHardware).unwrap();
    assert!(!ser.is_done());

    let mut ty = TypeExpr::Bytes(1);
    for _ in 0..20 {
        ty = TypeExpr::list(ty);
    }
    let deep = encode_rom(&normalize(&single("f", ty)).unwrap(), None);
    assert!(matches!(
        SerEngine::new(deep, WireConfig::default(), SerMode::ToHardware),
        Err(SerError::ConfigMismatch(_))
    ));

    // Frame headers need room for five octets once a list is present.
    let list = encode_rom(&normalize(&single("f", TypeExpr::list(TypeExpr::Bytes(4)))).unwrap(), None);
    assert!(matches!(
        SerEngine::new(list, cfg4(), SerMode::ToHardware),
        Err(SerError::Config(WireError::BadConfig(_)))
    ));

    let empty = SchemaDef::new("M").with_struct("M", vec![]);
    let ser = SerEngine::new(encode_rom(&normalize(&empty).unwrap(), None), WireConfig::default(), SerMode::ToSoftware).unwrap();
    assert!(ser.is_done());
}

#[test]
fn ser_feed_and_finish_examples() {
    let (def, _) = three_fields();
    let rom = Arc::new(encode_rom(&normalize(&def).unwrap(), None));
    for mode in [SerMode::ToSoftware, SerMode::ToHardware] {
        let mut ser = SerEngine::new(rom.clone(), cfg4(), mode).unwrap();
        assert!(ser.feed(&SerToken::Data(vec![0x34, 0x12])).unwrap().is_empty());
        let p = ser.feed(&SerToken::Data(vec![0x78, 0x56])).unwrap();
        assert_eq!(p.iter().map(Phit::to_le_hex).collect::<Vec<_>>(), ["0x56781234"]);
        let p = ser.feed(&SerToken::Data(vec![0xef, 0xbe, 0xad, 0xde])).unwrap();
        assert_eq!(p.iter().map(Phit::to_le_hex).collect::<Vec<_>>(), ["0xdeadbeef"]);
        let out = ser.finish().unwrap();
        assert!(out.phits.is_empty());
        assert_eq!(out.total_bytes, 8);
    }

    let mut ser = SerEngine::new(rom.clone(), cfg4(), SerMode::ToSoftware).unwrap();
    ser.feed(&SerToken::Data(vec![1, 2])).unwrap();
    assert!(matches!(ser.finish(), Err(SerError::IncompleteMessage { .. })));

    let five = single("f", TypeExpr::Bytes(5));
    let rom5 = encode_rom(&normalize(&five).unwrap(), None);
    let mut ser = SerEngine::new(rom5, cfg4(), SerMode::ToSoftware).unwrap();
    assert_eq!(ser.feed(&SerToken::Data(vec![1, 2, 3, 4, 5])).unwrap().len(), 1);
    let out = ser.finish().unwrap();
    assert_eq!(out.phits.len(), 1);
    assert_eq!(out.phits[0].as_bytes(), &[5, 0, 0, 0]);
    assert_eq!(out.total_bytes, 5);

    // Framed list of two 16-byte elements.
    let cfg = WireConfig::default();
    let list = single("f", TypeExpr::list(TypeExpr::Bytes(16)));
    let rom = Arc::new(encode_rom(&normalize(&list).unwrap(), None));
    let tokens = [SerToken::Data(vec![1; 16]), SerToken::Data(vec![2; 16]), SerToken::ListEnd(1)];
    let run = run_ser(&rom, cfg, SerMode::ToHardware, &tokens).unwrap();
    assert_eq!(run.phits.len(), 4);
    let h0 = decode_frame_header(run.phits[0].as_bytes(), &cfg).unwrap();
    assert_eq!(h0, FrameHeader { payload_bytes: 32, list_level: 1 });
    assert_eq!(run.phits[1].as_bytes(), &[1; 16]);
    assert_eq!(run.phits[2].as_bytes(), &[2; 16]);
    assert!(decode_frame_header(run.phits[3].as_bytes(), &cfg).unwrap().is_end_of_list());

    // Trailing array count toward software.
    let arr = single("f", TypeExpr::array(TypeExpr::Bytes(16)));
    let rom = Arc::new(encode_rom(&normalize(&arr).unwrap(), None));
    let tokens = [SerToken::ArrayLength(2), SerToken::Data(vec![1; 16]), SerToken::Data(vec![2; 16])];
    let run = run_ser(&rom, cfg, SerMode::ToSoftware, &tokens).unwrap();
    let bytes = unpack(&run.phits, run.total_bytes as usize).unwrap();
    let mut want = vec![1; 16];
    want.extend([2; 16]);
    want.extend([2, 0, 0, 0]);
    assert_eq!(bytes, want);
    assert_eq!(
        sw_deserialize_reverse(&bytes, &arr, &cfg).unwrap(),
        MessageValue::Struct(vec![MessageValue::Array(vec![
            MessageValue::Bytes(vec![1; 16]),
            MessageValue::Bytes(vec![2; 16]),
        ])])
    );
}

#[test]
fn sw_codec_examples() {
    let cfg = WireConfig::default();
    let (def, _) = three_fields();
    let v = MessageValue::Struct(vec![
        MessageValue::Bytes(vec![0x34, 0x12]),
        MessageValue::Bytes(vec![0x78, 0x56]),
        MessageValue::Bytes(vec![0xef, 0xbe, 0xad, 0xde]),
    ]);
    let bytes = sw_serialize(&v, &def, &cfg).unwrap();
    assert_eq!(hex::encode(&bytes), "34127856efbeadde");
    assert_eq!(sw_deserialize_forward(&bytes, &def, &cfg).unwrap(), v);
    assert_eq!(sw_deserialize_reverse(&bytes, &def, &cfg).unwrap(), v);

    let def8 = pair();
    let bytes = sw_serialize(&pair_message(), &def8, &cfg).unwrap();
    assert_eq!(hex::encode(&bytes), "01000000020000000100000002000000030000000400000005000000");
    assert_eq!(sw_deserialize_forward(&bytes, &def8, &cfg).unwrap(), pair_message());

    let list = single("f", TypeExpr::list(TypeExpr::Bytes(4)));
    let empty = MessageValue::Struct(vec![MessageValue::List(vec![])]);
    let bytes = sw_serialize(&empty, &list, &cfg).unwrap();
    assert_eq!(bytes, [0, 0, 0, 0]);
    assert_eq!(sw_deserialize_forward(&bytes, &list, &cfg).unwrap(), empty);

    assert!(matches!(
        sw_deserialize_forward(&[0x34, 0x12, 0x78], &def, &cfg),
        Err(CodecError::Truncated { .. })
    ));
    assert!(matches!(
        sw_deserialize_forward(&hex::decode("34127856efbeadde00").unwrap(), &def, &cfg),
        Err(CodecError::TrailingBytes { count: 1 })
    ));

    // Nested containers through the to-software serializer and back.
    let nested = single("f", TypeExpr::list(TypeExpr::array(TypeExpr::Bytes(4))));
    let tree = normalize(&nested).unwrap();
    let client = ClientSchema::sequential(&tree, true);
    let rom = Arc::new(encode_rom(&tree, None));
    let v = MessageValue::Struct(vec![MessageValue::List(vec![
        MessageValue::Array(vec![int(1)]),
        MessageValue::Array(vec![int(2), int(3)]),
    ])]);
    let tokens = adapt_tokens(&oracle_tokenize(&v, &nested, &client)).unwrap();
    let run = run_ser(&rom, cfg, SerMode::ToSoftware, &tokens).unwrap();
    let bytes = unpack(&run.phits, run.total_bytes as usize).unwrap();
    assert_eq!(sw_deserialize_reverse(&bytes, &nested, &cfg).unwrap(), v);
}

#[test]
fn oracle_examples() {
    let def = pair();
    let tokens = oracle_tokenize(&pair_message(), &def, &pair_tags(&def));
    assert_eq!(tokens.len(), 9);
    assert_eq!(tokens.iter().map(|t| t.tag.0).collect::<Vec<_>>(), [1, 2, 3, 4, 3, 4, 5, 6, 7]);

    let arr = single("f", TypeExpr::array(TypeExpr::Bytes(4)));
    let client = ClientSchema::sequential(&normalize(&arr).unwrap(), true);
    let v = MessageValue::Struct(vec![MessageValue::Array(vec![])]);
    let kinds: Vec<_> = oracle_tokenize(&v, &arr, &client).into_iter().map(|t| t.kind).collect();
    assert_eq!(kinds, [TokenKind::ArrayLength(0), TokenKind::ArrayEnd]);

    let list = single("f", TypeExpr::list(TypeExpr::Bytes(4)));
    let client = ClientSchema::sequential(&normalize(&list).unwrap(), false);
    let v = MessageValue::Struct(vec![MessageValue::List(vec![])]);
    let kinds: Vec<_> = oracle_tokenize(&v, &list, &client).into_iter().map(|t| t.kind).collect();
    assert_eq!(kinds, [TokenKind::ListBegin, TokenKind::ListEnd]);
}

#[test]
fn adapt_examples() {
    let def = pair();
    let tokens = oracle_tokenize(&pair_message(), &def, &pair_tags(&def));
    let le = |x: u32| SerToken::Data(x.to_le_bytes().to_vec());
    assert_eq!(
        adapt_tokens(&tokens).unwrap(),
        [SerToken::ArrayLength(2), le(1), le(2), le(3), le(4), SerToken::ListEnd(1), le(5)]
    );
    let begin = Token::new(Tag(0), TokenKind::ListBegin);
    let end = Token::new(Tag(1), TokenKind::ListEnd);
    assert_eq!(adapt_tokens(&[begin.clone(), end.clone()]).unwrap(), [SerToken::ListEnd(1)]);
    assert!(matches!(adapt_tokens(&[end, begin]), Err(CodecError::UnbalancedStream { .. })));
}

#[test]
fn loopback_examples() {
    let cfg = WireConfig::default();
    let model = CycleModel::default();
    let c = SweepKind::Array.compiled();
    let r = run_loopback(&SweepKind::Array.message(1), &c, cfg, &model).unwrap();
    assert_eq!(r.optimal_cycles, 2);
    assert!(r.ratio < 1.0 && r.round_trip_ok && r.tokens_match);
    let r = run_loopback(&SweepKind::Array.message(8192), &c, cfg, &model).unwrap();
    assert!(r.ratio >= 0.99 && r.round_trip_ok);

    let def = pair();
    let compiled = hgum::sim::Compiled::new(def.clone(), pair_tags(&def)).unwrap();
    let r = run_loopback(&pair_message(), &compiled, cfg, &model).unwrap();
    assert!(r.round_trip_ok && r.tokens_match);
    assert_eq!(r.optimal_cycles, 9);
}

#[test]
fn sweep_examples() {
    let cfg = WireConfig::default();
    let model = CycleModel::default();
    let pow2 = hgum::sim::powers_of_two(8192);
    let rows = sweep(SweepKind::Array, &pow2, cfg, &model).unwrap();
    assert!(rows.windows(2).all(|w| w[0].ratio <= w[1].ratio));
    let rows = sweep(SweepKind::List, &pow2, cfg, &model).unwrap();
    assert!(rows.iter().all(|r| r.ratio < 1.0));
    assert!(rows.windows(2).all(|w| w[0].ratio <= w[1].ratio));
    let one = sweep(SweepKind::List, &[1], cfg, &model).unwrap();
    assert_eq!(one.len(), 1);
    assert_eq!(one[0].optimal_cycles, 3);
    assert_eq!(
        hgum::sim::sweep_csv(&one).lines().next(),
        Some("n,optimal_cycles,measured_cycles,ratio")
    );
}
