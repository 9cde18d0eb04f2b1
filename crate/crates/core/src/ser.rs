// SPDX-License-Identifier: Apache-2.0

//! Streaming serializer: untagged tokens in, phits out.
//!
//! Walks the same ROM as the deserializer. The token stream carries no list
//! begin marker, so a list is opened as soon as the walk reaches it; from
//! then on each token either starts another element or is the list's
//! `ListEnd(level)`.
//!
//! [`SerMode::ToSoftware`] writes element counts after the elements, inner
//! containers first. [`SerMode::ToHardware`] writes array counts up front
//! and packs everything inside lists into frames, each preceded by a
//! one-phit header carrying the payload size and list level.

use std::sync::Arc;

use thiserror::Error;

use crate::des::EngineStats;
use crate::rom::{RomImage, RomKind, ROOT_FIRST_IDX};
use crate::wire::{encode_frame_header, encode_length, FrameHeader, Phit, WireConfig, WireError};

/// Serializer input token.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SerToken {
    Data(Vec<u8>),
    ArrayLength(u64),
    ListEnd(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SerMode {
    ToSoftware,
    ToHardware,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SerError {
    #[error(transparent)]
    Config(#[from] WireError),
    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),
    #[error("token {index}: {reason}")]
    SchemaMismatch { index: u64, reason: String },
    #[error("token {index}: list-end level {found}, open list depth is {expected}")]
    BadListLevel { index: u64, expected: usize, found: u32 },
    #[error("context stack overflow at token {index}")]
    DepthOverflow { index: u64 },
    #[error("count {value} does not fit the length field")]
    CountOverflow { value: u64 },
    #[error("message incomplete after {tokens} tokens")]
    IncompleteMessage { tokens: u64 },
    #[error("engine already failed; create a new one")]
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SerOutput {
    /// Remaining phits, the last one zero padded.
    pub phits: Vec<Phit>,
    /// Bytes written over the whole message, excluding the final padding.
    pub total_bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CtxType {
    Array,
    List,
}

#[derive(Debug, Clone, Copy)]
struct Context {
    /// Arrays: elements still to come. Lists: elements seen so far.
    num: u64,
    /// Arrays: declared length.
    len: u64,
    ctx_type: CtxType,
    child_ptr: usize,
    next_ptr: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pos {
    Visit(usize),
    Ascend,
    ListBoundary,
    Done,
}

pub struct SerEngine {
    rom: Arc<RomImage>,
    cfg: WireConfig,
    mode: SerMode,
    pos: Pos,
    stack: Vec<Context>,
    list_depth: usize,
    /// Bytes of the current, incomplete phit.
    partial: Vec<u8>,
    /// ToHardware: payload of the frame being assembled.
    frame: Vec<u8>,
    total_bytes: u64,
    tokens: u64,
    failed: bool,
    frames: u64,
    stats: EngineStats,
}

impl SerEngine {
    pub fn new(rom: impl Into<Arc<RomImage>>, cfg: WireConfig, mode: SerMode) -> Result<Self, SerError> {
        let rom = rom.into();
        match mode {
            SerMode::ToSoftware => cfg.validate()?,
            SerMode::ToHardware if rom.max_list_depth > 0 => cfg.validate_framed()?,
            SerMode::ToHardware => cfg.validate()?,
        }
        if rom.max_depth > cfg.max_depth {
            return Err(SerError::ConfigMismatch(format!(
                "schema depth {} exceeds context stack capacity {}",
                rom.max_depth, cfg.max_depth
            )));
        }
        if rom.max_list_depth > u8::MAX as usize {
            return Err(SerError::ConfigMismatch("list nesting deeper than 255".into()));
        }
        let mut engine = SerEngine {
            rom,
            cfg,
            mode,
            pos: Pos::Visit(ROOT_FIRST_IDX),
            stack: Vec::with_capacity(cfg.max_depth),
            list_depth: 0,
            partial: Vec::with_capacity(cfg.phit_bytes),
            frame: Vec::new(),
            total_bytes: 0,
            tokens: 0,
            failed: false,
            frames: 0,
            stats: EngineStats::default(),
        };
        engine.settle();
        Ok(engine)
    }

    pub fn mode(&self) -> SerMode {
        self.mode
    }

    pub fn is_done(&self) -> bool {
        self.pos == Pos::Done
    }

    pub fn stats(&self) -> EngineStats {
        self.stats
    }

    /// Number of frames emitted so far, end-of-list frames included.
    pub fn frames_emitted(&self) -> u64 {
        self.frames
    }

    pub fn feed(&mut self, token: &SerToken) -> Result<Vec<Phit>, SerError> {
        let mut out = Vec::new();
        self.feed_into(token, &mut out)?;
        Ok(out)
    }

    /// Like [`feed`](Self::feed) but appends to `out`.
    pub fn feed_into(&mut self, token: &SerToken, out: &mut Vec<Phit>) -> Result<(), SerError> {
        if self.failed {
            return Err(SerError::Failed);
        }
        let result = self.consume(token, out);
        self.tokens += 1;
        match result {
            Ok(()) => self.settle_with(out),
            Err(e) => {
                self.failed = true;
                Err(e)
            }
        }
    }

    pub fn finish(mut self) -> Result<SerOutput, SerError> {
        if self.failed || self.pos != Pos::Done {
            return Err(SerError::IncompleteMessage { tokens: self.tokens });
        }
        let mut phits = Vec::new();
        if !self.partial.is_empty() {
            let mut last = std::mem::take(&mut self.partial);
            last.resize(self.cfg.phit_bytes, 0);
            phits.push(Phit::new(last));
        }
        Ok(SerOutput {
            phits,
            total_bytes: self.total_bytes,
        })
    }

    fn consume(&mut self, token: &SerToken, out: &mut Vec<Phit>) -> Result<(), SerError> {
        loop {
            match self.pos {
                Pos::Done => return Err(self.mismatch("token after end of message")),
                Pos::Ascend => self.ascend(out)?,
                Pos::ListBoundary => match token {
                    SerToken::ListEnd(level) if *level as usize <= self.list_depth => {
                        if *level as usize != self.list_depth {
                            return Err(SerError::BadListLevel {
                                index: self.tokens,
                                expected: self.list_depth,
                                found: *level,
                            });
                        }
                        return self.close_list(out);
                    }
                    // Data, a count, or the end of a list nested in a new element.
                    _ => {
                        let top = self.stack.last_mut().expect("open list");
                        top.num += 1;
                        self.pos = Pos::Visit(top.child_ptr);
                    }
                },
                Pos::Visit(idx) => match self.rom.entries[idx].kind {
                    RomKind::End => self.pos = Pos::Done,
                    RomKind::List => self.open_list(idx, out)?,
                    RomKind::Bytes(_) | RomKind::Array if matches!(token, SerToken::ListEnd(_)) => {
                        let SerToken::ListEnd(found) = *token else { unreachable!() };
                        return Err(SerError::BadListLevel {
                            index: self.tokens,
                            expected: self.list_depth,
                            found,
                        });
                    }
                    RomKind::Bytes(n) => {
                        let SerToken::Data(bytes) = token else {
                            return Err(self.mismatch(format!("expected {n}-byte data at {}", self.path(idx))));
                        };
                        if bytes.len() != n {
                            return Err(self.mismatch(format!(
                                "{} expects {n} bytes, got {}",
                                self.path(idx),
                                bytes.len()
                            )));
                        }
                        self.write_leaf(bytes, out)?;
                        self.advance_after(idx);
                        return Ok(());
                    }
                    RomKind::Array => {
                        let SerToken::ArrayLength(n) = *token else {
                            return Err(self.mismatch(format!("expected array length at {}", self.path(idx))));
                        };
                        if n > self.cfg.max_count() {
                            return Err(SerError::CountOverflow { value: n });
                        }
                        if self.mode == SerMode::ToHardware || n == 0 {
                            self.write_leaf(&encode_length(n, self.cfg.length_bytes)?, out)?;
                        }
                        if n == 0 {
                            self.advance_after(idx);
                        } else {
                            self.push(idx, CtxType::Array, n)?;
                        }
                        return Ok(());
                    }
                },
            }
        }
    }

    /// Moves past positions that need no input: finished elements and END.
    fn settle(&mut self) {
        let mut sink = Vec::new();
        // Only array closes produce output, and only once data was written.
        let _ = self.settle_with(&mut sink);
        debug_assert!(sink.is_empty());
    }

    fn settle_with(&mut self, out: &mut Vec<Phit>) -> Result<(), SerError> {
        loop {
            match self.pos {
                Pos::Ascend => self.ascend(out)?,
                Pos::Visit(idx) if self.rom.entries[idx].kind == RomKind::End => self.pos = Pos::Done,
                _ => return Ok(()),
            }
        }
    }

    fn ascend(&mut self, out: &mut Vec<Phit>) -> Result<(), SerError> {
        let top = self.stack.last_mut().expect("END terminates the top-level run");
        match top.ctx_type {
            CtxType::List => self.pos = Pos::ListBoundary,
            CtxType::Array => {
                top.num -= 1;
                if top.num > 0 {
                    self.pos = Pos::Visit(top.child_ptr);
                } else {
                    let ctx = self.pop();
                    if self.mode == SerMode::ToSoftware {
                        self.write_leaf(&encode_length(ctx.len, self.cfg.length_bytes)?, out)?;
                    }
                    self.resume(ctx);
                }
            }
        }
        Ok(())
    }

    fn open_list(&mut self, idx: usize, out: &mut Vec<Phit>) -> Result<(), SerError> {
        if self.mode == SerMode::ToHardware {
            if self.list_depth == 0 {
                self.pad_to_phit(out);
            } else {
                self.flush_frame(out)?;
            }
        }
        self.push(idx, CtxType::List, 0)?;
        Ok(())
    }

    fn close_list(&mut self, out: &mut Vec<Phit>) -> Result<(), SerError> {
        let level = self.list_depth as u8;
        if self.mode == SerMode::ToHardware {
            self.flush_frame(out)?;
        }
        let ctx = self.pop();
        match self.mode {
            SerMode::ToSoftware => {
                if ctx.num > self.cfg.max_count() {
                    return Err(SerError::CountOverflow { value: ctx.num });
                }
                self.write_leaf(&encode_length(ctx.num, self.cfg.length_bytes)?, out)?;
            }
            SerMode::ToHardware => {
                let header = encode_frame_header(FrameHeader::end_of_list(level), &self.cfg)?;
                self.frames += 1;
                self.stats.frame_headers += 1;
                self.emit_raw(header.as_bytes(), out);
            }
        }
        self.resume(ctx);
        Ok(())
    }

    fn push(&mut self, idx: usize, ctx_type: CtxType, num: u64) -> Result<(), SerError> {
        if self.stack.len() >= self.cfg.max_depth {
            return Err(SerError::DepthOverflow { index: self.tokens });
        }
        let entry = &self.rom.entries[idx];
        let ctx = Context {
            num,
            len: num,
            ctx_type,
            child_ptr: entry.child_idx.expect("containers have children"),
            next_ptr: (!entry.last_child).then_some(idx + 1),
        };
        self.stack.push(ctx);
        self.stats.pushes += 1;
        self.pos = match ctx_type {
            CtxType::Array => Pos::Visit(ctx.child_ptr),
            CtxType::List => {
                self.list_depth += 1;
                Pos::ListBoundary
            }
        };
        Ok(())
    }

    fn pop(&mut self) -> Context {
        let ctx = self.stack.pop().expect("closing an open context");
        self.stats.pops += 1;
        if ctx.ctx_type == CtxType::List {
            self.list_depth -= 1;
        }
        ctx
    }

    fn resume(&mut self, ctx: Context) {
        self.pos = match ctx.next_ptr {
            Some(next) => Pos::Visit(next),
            None => Pos::Ascend,
        };
    }

    fn advance_after(&mut self, idx: usize) {
        self.pos = if self.rom.entries[idx].last_child {
            Pos::Ascend
        } else {
            Pos::Visit(idx + 1)
        };
    }

    /// Writes one field's bytes, either straight to the stream or into the
    /// current frame.
    fn write_leaf(&mut self, bytes: &[u8], out: &mut Vec<Phit>) -> Result<(), SerError> {
        if self.mode == SerMode::ToSoftware || self.list_depth == 0 {
            self.emit_raw(bytes, out);
            return Ok(());
        }
        let cap = self.cfg.frame_capacity();
        if bytes.len() <= cap {
            if self.frame.len() + bytes.len() > cap {
                self.flush_frame(out)?;
            }
            self.frame.extend_from_slice(bytes);
            self.note_buffered();
            if self.frame.len() == cap {
                self.flush_frame(out)?;
            }
            return Ok(());
        }
        // Larger than any frame: fill frames to capacity.
        let mut rest = bytes;
        while !rest.is_empty() {
            let room = cap - self.frame.len();
            let (now, later) = rest.split_at(room.min(rest.len()));
            self.frame.extend_from_slice(now);
            self.note_buffered();
            if self.frame.len() == cap {
                self.flush_frame(out)?;
            }
            rest = later;
        }
        Ok(())
    }

    fn flush_frame(&mut self, out: &mut Vec<Phit>) -> Result<(), SerError> {
        if self.frame.is_empty() {
            return Ok(());
        }
        let header = FrameHeader {
            payload_bytes: self.frame.len() as u32,
            list_level: self.list_depth as u8,
        };
        let header = encode_frame_header(header, &self.cfg)?;
        self.frames += 1;
        self.stats.frame_headers += 1;
        self.emit_raw(header.as_bytes(), out);
        let payload = std::mem::take(&mut self.frame);
        self.emit_raw(&payload, out);
        self.pad_to_phit(out);
        self.frame = payload;
        self.frame.clear();
        Ok(())
    }

    fn pad_to_phit(&mut self, out: &mut Vec<Phit>) {
        if !self.partial.is_empty() {
            let pad = self.cfg.phit_bytes - self.partial.len();
            self.emit_raw(&vec![0; pad], out);
        }
    }

    fn emit_raw(&mut self, mut bytes: &[u8], out: &mut Vec<Phit>) {
        self.total_bytes += bytes.len() as u64;
        let w = self.cfg.phit_bytes;
        while !bytes.is_empty() {
            let take = (w - self.partial.len()).min(bytes.len());
            self.partial.extend_from_slice(&bytes[..take]);
            bytes = &bytes[take..];
            if self.partial.len() == w {
                out.push(Phit::new(std::mem::replace(&mut self.partial, Vec::with_capacity(w))));
            }
        }
        self.note_buffered();
    }

    fn note_buffered(&mut self) {
        let held = self.frame.len() + self.partial.len();
        self.stats.peak_buffered_bytes = self.stats.peak_buffered_bytes.max(held);
    }

    fn path(&self, idx: usize) -> &str {
        &self.rom.entries[idx].path
    }

    fn mismatch(&self, reason: impl Into<String>) -> SerError {
        SerError::SchemaMismatch {
            index: self.tokens,
            reason: reason.into(),
        }
    }
}
