// SPDX-License-Identifier: Apache-2.0

//! Loopback pipeline and cycle-cost model.
//!
//! The pipeline is software serializer, hardware DES, hardware SER, hardware
//! DES, hardware SER, software reverse deserializer. Stages run one after
//! another but are costed as overlapped, so a message's cost is the cost of
//! the slowest hardware stage.

use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::codec::{adapt_owned, oracle_token_count, oracle_tokenize, sw_deserialize_reverse, sw_serialize, CodecError};
use crate::des::{DesEngine, DesError, DesMode, EngineStats};
use crate::rom::{encode_rom, RomImage};
use crate::schema::{normalize, ClientSchema, Field, MessageValue, SchemaDef, SchemaError, TypeExpr};
use crate::ser::{SerEngine, SerError, SerMode, SerToken};
use crate::tokens::{Token, TokenKind};
use crate::wire::{pack, unpack, Phit, WireConfig, WireError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("deserializer: {0}")]
    Des(#[from] DesError),
    #[error("serializer: {0}")]
    Ser(#[from] SerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleModel {
    pub control_token: u64,
    pub context: u64,
    pub frame_header: u64,
    pub message: u64,
}

impl Default for CycleModel {
    fn default() -> Self {
        CycleModel {
            control_token: 1,
            context: 1,
            frame_header: 2,
            message: 4,
        }
    }
}

impl CycleModel {
    pub fn data_token(&self, bytes: usize, phit_bytes: usize) -> u64 {
        (bytes.div_ceil(phit_bytes) as u64).max(1)
    }

    fn des_tokens(&self, tokens: &[Token], phit_bytes: usize) -> u64 {
        tokens
            .iter()
            .map(|t| match &t.kind {
                TokenKind::Data(b) => self.data_token(b.len(), phit_bytes),
                _ => self.control_token,
            })
            .sum()
    }

    fn ser_tokens(&self, tokens: &[SerToken], phit_bytes: usize) -> u64 {
        tokens
            .iter()
            .map(|t| match t {
                SerToken::Data(b) => self.data_token(b.len(), phit_bytes),
                _ => self.control_token,
            })
            .sum()
    }

    fn overhead(&self, stats: &EngineStats) -> u64 {
        self.context * (stats.pushes + stats.pops) + self.frame_header * stats.frame_headers + self.message
    }
}

pub const STAGE_NAMES: [&str; 4] = ["des-from-sw", "ser-to-hw", "des-from-hw", "ser-to-sw"];
pub const HOP_NAMES: [&str; 3] = ["sw-to-hw", "hw-to-hw", "hw-to-sw"];

#[derive(Debug, Clone, PartialEq)]
pub struct LoopbackReport {
    pub stage_cycles: [u64; 4],
    pub bottleneck_cycles: u64,
    pub optimal_cycles: u64,
    pub ratio: f64,
    pub round_trip_ok: bool,
    /// Both hardware deserializers produced exactly the reference tokens.
    pub tokens_match: bool,
    pub frame_count: u64,
    pub wire_bytes: [u64; 3],
    pub stage_stats: [EngineStats; 4],
}

/// Shared compiled state for one (schema, client schema) pair.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub def: SchemaDef,
    pub client: ClientSchema,
    pub tagged: Arc<RomImage>,
    pub untagged: Arc<RomImage>,
}

impl Compiled {
    pub fn new(def: SchemaDef, client: ClientSchema) -> Result<Self, SimError> {
        let tree = normalize(&def)?;
        Ok(Compiled {
            tagged: Arc::new(encode_rom(&tree, Some(&client))),
            untagged: Arc::new(encode_rom(&tree, None)),
            def,
            client,
        })
    }
}

/// Output of one deserializer hop.
#[derive(Debug, Clone)]
pub struct DesRun {
    pub tokens: Vec<Token>,
    pub stats: EngineStats,
}

/// Output of one serializer hop.
#[derive(Debug, Clone)]
pub struct SerRun {
    pub phits: Vec<Phit>,
    pub total_bytes: u64,
    pub frames: u64,
    pub stats: EngineStats,
}

pub fn run_des(rom: &Arc<RomImage>, cfg: WireConfig, mode: DesMode, phits: &[Phit]) -> Result<DesRun, DesError> {
    let mut des = DesEngine::new(rom.clone(), cfg, mode)?;
    let mut tokens = Vec::with_capacity(phits.len());
    for p in phits {
        des.feed_into(p.as_bytes(), &mut tokens)?;
    }
    des.finish()?;
    Ok(DesRun {
        tokens,
        stats: des.stats(),
    })
}

pub fn run_ser(rom: &Arc<RomImage>, cfg: WireConfig, mode: SerMode, tokens: &[SerToken]) -> Result<SerRun, SerError> {
    let mut ser = SerEngine::new(rom.clone(), cfg, mode)?;
    let mut phits = Vec::new();
    for t in tokens {
        ser.feed_into(t, &mut phits)?;
    }
    let frames = ser.frames_emitted();
    let stats = ser.stats();
    let out = ser.finish()?;
    phits.extend(out.phits);
    Ok(SerRun {
        phits,
        total_bytes: out.total_bytes,
        frames,
        stats,
    })
}

pub fn optimal_cycles(value: &MessageValue, def: &SchemaDef, client: &ClientSchema) -> u64 {
    oracle_tokenize(value, def, client).len() as u64
}

struct Stages {
    stage_cycles: [u64; 4],
    stage_stats: [EngineStats; 4],
    frames: u64,
    wire_bytes: [u64; 3],
    tokens_match: bool,
    out: Vec<Phit>,
}

/// Runs the four engine stages. Token streams are compared against `oracle`
/// when one is given.
fn run_stages(
    value: &MessageValue,
    compiled: &Compiled,
    cfg: WireConfig,
    model: &CycleModel,
    oracle: Option<&[Token]>,
) -> Result<Stages, SimError> {
    let Compiled { def, tagged, untagged, .. } = compiled;
    let pb = cfg.phit_bytes;
    let sw_bytes = sw_serialize(value, def, &cfg)?;
    let d1 = run_des(tagged, cfg, DesMode::FromSoftware, &pack(&sw_bytes, pb))?;
    let c1 = model.des_tokens(&d1.tokens, pb) + model.overhead(&d1.stats);
    let mut tokens_match = oracle.is_none_or(|o| d1.tokens == o);
    let in1 = adapt_owned(d1.tokens)?;
    let s1 = run_ser(untagged, cfg, SerMode::ToHardware, &in1)?;
    let c2 = model.ser_tokens(&in1, pb) + model.overhead(&s1.stats);
    drop(in1);
    let d2 = run_des(tagged, cfg, DesMode::FromHardware, &s1.phits)?;
    let c3 = model.des_tokens(&d2.tokens, pb) + model.overhead(&d2.stats);
    tokens_match &= oracle.is_none_or(|o| d2.tokens == o);
    let in2 = adapt_owned(d2.tokens)?;
    let s2 = run_ser(untagged, cfg, SerMode::ToSoftware, &in2)?;
    let c4 = model.ser_tokens(&in2, pb) + model.overhead(&s2.stats);
    Ok(Stages {
        stage_cycles: [c1, c2, c3, c4],
        stage_stats: [d1.stats, s1.stats, d2.stats, s2.stats],
        frames: s1.frames,
        wire_bytes: [sw_bytes.len() as u64, s1.total_bytes, s2.total_bytes],
        tokens_match,
        out: s2.phits,
    })
}

pub fn run_loopback(
    value: &MessageValue,
    compiled: &Compiled,
    cfg: WireConfig,
    model: &CycleModel,
) -> Result<LoopbackReport, SimError> {
    let oracle = oracle_tokenize(value, &compiled.def, &compiled.client);
    let st = run_stages(value, compiled, cfg, model, Some(&oracle))?;
    let back = unpack(&st.out, st.wire_bytes[2] as usize)?;
    let recovered = sw_deserialize_reverse(&back, &compiled.def, &cfg)?;
    let bottleneck_cycles = *st.stage_cycles.iter().max().expect("four stages");
    let optimal = oracle.len() as u64;
    Ok(LoopbackReport {
        stage_cycles: st.stage_cycles,
        bottleneck_cycles,
        optimal_cycles: optimal,
        ratio: optimal as f64 / bottleneck_cycles as f64,
        round_trip_ok: recovered == *value,
        tokens_match: st.tokens_match,
        frame_count: st.frames,
        wire_bytes: st.wire_bytes,
        stage_stats: st.stage_stats,
    })
}

/// Cycle accounting only: no token comparison and no final software decode.
pub fn measure(value: &MessageValue, compiled: &Compiled, cfg: WireConfig, model: &CycleModel) -> Result<SweepRow, SimError> {
    let optimal = oracle_token_count(value, &compiled.def, &compiled.client) as u64;
    let st = run_stages(value, compiled, cfg, model, None)?;
    let measured = *st.stage_cycles.iter().max().expect("four stages");
    Ok(SweepRow {
        n: 0,
        optimal_cycles: optimal,
        measured_cycles: measured,
        ratio: optimal as f64 / measured as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Array,
    List,
}

impl SweepKind {
    /// `{f: Array<Bytes(16)>}` or `{f: List<Bytes(16)>}`, tagged without an
    /// array end token.
    pub fn compiled(self) -> Compiled {
        let elem = TypeExpr::Bytes(16);
        let ty = match self {
            SweepKind::Array => TypeExpr::array(elem),
            SweepKind::List => TypeExpr::list(elem),
        };
        let def = SchemaDef::new("Msg").with_struct("Msg", vec![Field::new("f", ty)]);
        let tree = normalize(&def).expect("fixed schema is valid");
        let client = ClientSchema::sequential(&tree, false);
        Compiled::new(def, client).expect("fixed schema is valid")
    }

    pub fn message(self, n: usize) -> MessageValue {
        let items = (0..n)
            .map(|i| MessageValue::Bytes((i as u128).to_le_bytes().to_vec()))
            .collect();
        MessageValue::Struct(vec![match self {
            SweepKind::Array => MessageValue::Array(items),
            SweepKind::List => MessageValue::List(items),
        }])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub optimal_cycles: u64,
    pub measured_cycles: u64,
    pub ratio: f64,
}

pub fn sweep(kind: SweepKind, lengths: &[usize], cfg: WireConfig, model: &CycleModel) -> Result<Vec<SweepRow>, SimError> {
    let compiled = kind.compiled();
    lengths
        .iter()
        .map(|&n| {
            let row = measure(&kind.message(n), &compiled, cfg, model)?;
            Ok(SweepRow { n, ..row })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("n,optimal_cycles,measured_cycles,ratio\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{:.6}", r.n, r.optimal_cycles, r.measured_cycles, r.ratio);
    }
    s
}

/// Powers of two from 1 up to and including `max`.
pub fn powers_of_two(max: usize) -> Vec<usize> {
    std::iter::successors(Some(1usize), |n| n.checked_mul(2))
        .take_while(|&n| n <= max)
        .collect()
}
