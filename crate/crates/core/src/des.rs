// SPDX-License-Identifier: Apache-2.0

//! Streaming deserializer: phits in, tagged tokens out.
//!
//! The engine walks the schema ROM with a context stack. Each context
//! records how many elements of an open array or list are still to come,
//! where the element's first field lives and where to go once the container
//! is finished. Input is consumed eagerly: every [`DesEngine::feed`] call
//! advances the walk as far as the buffered bytes allow and returns every
//! token completed on the way.
//!
//! In [`DesMode::FromSoftware`] both arrays and lists carry a leading
//! element count. In [`DesMode::FromHardware`] arrays do, but list data
//! arrives in frames whose headers carry the list nesting level; an empty
//! frame closes the innermost list.

use std::collections::VecDeque;
use std::sync::Arc;

use thiserror::Error;

use crate::rom::{RomImage, RomKind, ROOT_FIRST_IDX};
use crate::schema::Tag;
use crate::tokens::{Token, TokenKind};
use crate::wire::{decode_frame_header, decode_length, FrameHeader, WireConfig, WireError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesMode {
    FromSoftware,
    FromHardware,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DesError {
    #[error(transparent)]
    Config(#[from] WireError),
    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),
    #[error("schema ROM is missing a mandatory tag at entry {0}")]
    UntaggedRom(usize),
    #[error("context stack overflow at byte {offset}")]
    DepthOverflow { offset: u64 },
    #[error("frame protocol error at byte {offset}: {reason}")]
    FrameProtocol { offset: u64, reason: String },
    #[error("trailing data at byte {offset}")]
    TrailingData { offset: u64 },
    #[error("message incomplete after {bytes_consumed} bytes")]
    IncompleteMessage { bytes_consumed: u64 },
    #[error("engine already failed; create a new one")]
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DesSummary {
    pub done: bool,
    pub tokens_emitted: u64,
    pub bytes_consumed: u64,
}

/// Activity counters, used by the cycle model and by buffering checks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub pushes: u64,
    pub pops: u64,
    pub frame_headers: u64,
    pub peak_buffered_bytes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CtxType {
    Array,
    List,
}

#[derive(Debug, Clone, Copy)]
struct Context {
    /// Elements not yet fully deserialized; `None` for a framed list whose
    /// length is only known when its closing frame arrives.
    num: Option<u64>,
    ctx_type: CtxType,
    entry: usize,
    child_ptr: usize,
    next_ptr: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pos {
    Visit(usize),
    /// An element of the top context just finished.
    Ascend,
    /// Framed list: between elements (or before the first one).
    ListBoundary,
    Done,
}

enum Take {
    Got(Vec<u8>),
    Stall,
    NeedHeader,
}

pub struct DesEngine {
    rom: Arc<RomImage>,
    cfg: WireConfig,
    mode: DesMode,
    pos: Pos,
    stack: Vec<Context>,
    list_depth: usize,
    buf: VecDeque<u8>,
    /// Absolute wire offset of `buf[0]`.
    offset: u64,
    /// Unconsumed payload bytes of the current frame.
    frame_remaining: usize,
    /// Bytes of a leaf larger than a whole frame, gathered across frames.
    partial: Vec<u8>,
    tokens_emitted: u64,
    done_at: Option<u64>,
    failed: bool,
    stats: EngineStats,
}

impl DesEngine {
    pub fn new(rom: impl Into<Arc<RomImage>>, cfg: WireConfig, mode: DesMode) -> Result<Self, DesError> {
        let rom = rom.into();
        match mode {
            DesMode::FromSoftware => cfg.validate()?,
            DesMode::FromHardware if rom.max_list_depth > 0 => cfg.validate_framed()?,
            DesMode::FromHardware => cfg.validate()?,
        }
        if rom.max_depth > cfg.max_depth {
            return Err(DesError::ConfigMismatch(format!(
                "schema depth {} exceeds context stack capacity {}",
                rom.max_depth, cfg.max_depth
            )));
        }
        if rom.max_list_depth > u8::MAX as usize {
            return Err(DesError::ConfigMismatch("list nesting deeper than 255".into()));
        }
        for (i, e) in rom.entries.iter().enumerate() {
            let ok = match e.kind {
                RomKind::Bytes(_) => e.data_tag.is_some(),
                RomKind::Array => e.start_tag.is_some() && (!e.emit_end || e.end_tag.is_some()),
                RomKind::List => e.start_tag.is_some() && e.end_tag.is_some(),
                RomKind::End => true,
            };
            if !ok {
                return Err(DesError::UntaggedRom(i));
            }
        }
        let mut engine = DesEngine {
            rom,
            cfg,
            mode,
            pos: Pos::Visit(ROOT_FIRST_IDX),
            stack: Vec::with_capacity(cfg.max_depth),
            list_depth: 0,
            buf: VecDeque::new(),
            offset: 0,
            frame_remaining: 0,
            partial: Vec::new(),
            tokens_emitted: 0,
            done_at: None,
            failed: false,
            stats: EngineStats::default(),
        };
        // An END-only schema is complete before any input.
        let mut sink = Vec::new();
        engine.run(&mut sink)?;
        Ok(engine)
    }

    pub fn mode(&self) -> DesMode {
        self.mode
    }

    pub fn is_done(&self) -> bool {
        self.pos == Pos::Done
    }

    pub fn stack_depth(&self) -> usize {
        self.stack.len()
    }

    pub fn stats(&self) -> EngineStats {
        self.stats
    }

    /// Feeds one phit and returns the tokens it completes, in schema order.
    pub fn feed(&mut self, phit: &[u8]) -> Result<Vec<Token>, DesError> {
        let mut out = Vec::new();
        self.feed_into(phit, &mut out)?;
        Ok(out)
    }

    /// Like [`feed`](Self::feed) but appends to `out`.
    pub fn feed_into(&mut self, phit: &[u8], out: &mut Vec<Token>) -> Result<(), DesError> {
        if self.failed {
            return Err(DesError::Failed);
        }
        if phit.len() != self.cfg.phit_bytes {
            self.failed = true;
            return Err(WireError::PhitWidth {
                expected: self.cfg.phit_bytes,
                actual: phit.len(),
            }
            .into());
        }
        if self.pos == Pos::Done {
            self.failed = true;
            return Err(DesError::TrailingData {
                offset: self.offset + self.buf.len() as u64,
            });
        }
        self.buf.extend(phit);
        self.stats.peak_buffered_bytes = self
            .stats
            .peak_buffered_bytes
            .max(self.buf.len() + self.partial.len());
        match self.run(out) {
            Ok(()) => Ok(()),
            Err(e) => {
                self.failed = true;
                Err(e)
            }
        }
    }

    pub fn finish(&self) -> Result<DesSummary, DesError> {
        match self.done_at {
            Some(bytes_consumed) if !self.failed => Ok(DesSummary {
                done: true,
                tokens_emitted: self.tokens_emitted,
                bytes_consumed,
            }),
            _ => Err(DesError::IncompleteMessage {
                bytes_consumed: self.offset,
            }),
        }
    }

    fn run(&mut self, out: &mut Vec<Token>) -> Result<(), DesError> {
        loop {
            match self.pos {
                Pos::Done => return self.check_trailing(),
                Pos::Ascend => self.ascend(out),
                Pos::ListBoundary => {
                    if self.frame_remaining > 0 {
                        self.pos = Pos::Visit(self.top().child_ptr);
                    } else if !self.read_header(out)? {
                        return Ok(());
                    }
                }
                Pos::Visit(idx) => {
                    if !self.visit(idx, out)? {
                        return Ok(());
                    }
                }
            }
        }
    }

    /// Returns `false` when the walk must wait for more input.
    fn visit(&mut self, idx: usize, out: &mut Vec<Token>) -> Result<bool, DesError> {
        let entry = &self.rom.entries[idx];
        match entry.kind {
            RomKind::End => {
                self.pos = Pos::Done;
                self.done_at = Some(self.offset);
                Ok(true)
            }
            RomKind::Bytes(n) => {
                let tag = entry.data_tag.expect("checked in new");
                match self.take(n)? {
                    Take::Got(bytes) => {
                        self.emit(out, tag, TokenKind::Data(bytes));
                        self.advance_after(idx);
                        Ok(true)
                    }
                    Take::Stall => Ok(false),
                    Take::NeedHeader => self.read_header(out),
                }
            }
            RomKind::Array => match self.take(self.cfg.length_bytes)? {
                Take::Got(octets) => {
                    self.open(idx, CtxType::Array, decode_length(&octets), out)?;
                    Ok(true)
                }
                Take::Stall => Ok(false),
                Take::NeedHeader => self.read_header(out),
            },
            RomKind::List => match self.mode {
                DesMode::FromSoftware => match self.take(self.cfg.length_bytes)? {
                    Take::Got(octets) => {
                        self.open(idx, CtxType::List, decode_length(&octets), out)?;
                        Ok(true)
                    }
                    Take::Stall => Ok(false),
                    Take::NeedHeader => unreachable!("unframed mode never needs headers"),
                },
                DesMode::FromHardware => {
                    if self.frame_remaining > 0 {
                        return Err(self.protocol("list starts in the middle of a frame"));
                    }
                    self.read_header(out)
                }
            },
        }
    }

    /// Emits the start token of a counted container and pushes a context
    /// for it unless it is empty.
    fn open(&mut self, idx: usize, ctx_type: CtxType, count: u64, out: &mut Vec<Token>) -> Result<(), DesError> {
        let entry = &self.rom.entries[idx];
        let start = entry.start_tag.expect("checked in new");
        let kind = match ctx_type {
            CtxType::Array => TokenKind::ArrayLength(count),
            CtxType::List => TokenKind::ListBegin,
        };
        self.emit(out, start, kind);
        if count == 0 {
            self.emit_end(idx, out);
            self.advance_after(idx);
            return Ok(());
        }
        self.push(idx, ctx_type, Some(count))?;
        Ok(())
    }

    fn push(&mut self, idx: usize, ctx_type: CtxType, num: Option<u64>) -> Result<(), DesError> {
        if self.stack.len() >= self.cfg.max_depth {
            return Err(DesError::DepthOverflow { offset: self.offset });
        }
        let entry = &self.rom.entries[idx];
        let ctx = Context {
            num,
            ctx_type,
            entry: idx,
            child_ptr: entry.child_idx.expect("containers have children"),
            next_ptr: (!entry.last_child).then_some(idx + 1),
        };
        self.stack.push(ctx);
        self.stats.pushes += 1;
        if ctx_type == CtxType::List {
            self.list_depth += 1;
        }
        self.pos = match num {
            Some(_) => Pos::Visit(ctx.child_ptr),
            None => Pos::ListBoundary,
        };
        Ok(())
    }

    fn ascend(&mut self, out: &mut Vec<Token>) {
        let top = self.stack.last_mut().expect("END terminates the top-level run");
        match &mut top.num {
            Some(n) => {
                *n -= 1;
                if *n > 0 {
                    self.pos = Pos::Visit(top.child_ptr);
                } else {
                    self.close_top(out);
                }
            }
            None => self.pos = Pos::ListBoundary,
        }
    }

    fn close_top(&mut self, out: &mut Vec<Token>) {
        let ctx = self.stack.pop().expect("closing an open context");
        self.stats.pops += 1;
        if ctx.ctx_type == CtxType::List {
            self.list_depth -= 1;
        }
        self.emit_end(ctx.entry, out);
        self.pos = match ctx.next_ptr {
            Some(next) => Pos::Visit(next),
            None => Pos::Ascend,
        };
    }

    fn emit_end(&mut self, idx: usize, out: &mut Vec<Token>) {
        let entry = &self.rom.entries[idx];
        let token = match entry.kind {
            RomKind::Array if entry.emit_end => Some(TokenKind::ArrayEnd),
            RomKind::List => Some(TokenKind::ListEnd),
            _ => None,
        };
        if let (Some(kind), Some(tag)) = (token, entry.end_tag) {
            self.emit(out, tag, kind);
        }
    }

    fn advance_after(&mut self, idx: usize) {
        self.pos = if self.rom.entries[idx].last_child {
            Pos::Ascend
        } else {
            Pos::Visit(idx + 1)
        };
    }

    fn emit(&mut self, out: &mut Vec<Token>, tag: Tag, kind: TokenKind) {
        self.tokens_emitted += 1;
        out.push(Token::new(tag, kind));
    }

    fn top(&self) -> &Context {
        self.stack.last().expect("list boundary implies an open list")
    }

    fn framed_now(&self) -> bool {
        self.mode == DesMode::FromHardware && self.list_depth > 0
    }

    fn consume(&mut self, n: usize) -> Vec<u8> {
        self.offset += n as u64;
        let mut v = Vec::with_capacity(n);
        let (a, b) = self.buf.as_slices();
        let head = n.min(a.len());
        v.extend_from_slice(&a[..head]);
        v.extend_from_slice(&b[..n - head]);
        self.buf.drain(..n);
        v
    }

    fn take(&mut self, n: usize) -> Result<Take, DesError> {
        if !self.framed_now() {
            if self.buf.len() < n {
                return Ok(Take::Stall);
            }
            return Ok(Take::Got(self.consume(n)));
        }
        let need = n - self.partial.len();
        if self.frame_remaining == 0 {
            return Ok(Take::NeedHeader);
        }
        if self.frame_remaining < need && n <= self.cfg.frame_capacity() {
            return Err(self.protocol("field straddles a frame boundary"));
        }
        let avail = need.min(self.frame_remaining);
        if self.buf.len() < avail {
            return Ok(Take::Stall);
        }
        let chunk = self.consume(avail);
        self.frame_remaining -= avail;
        if self.partial.is_empty() && avail == n {
            return Ok(Take::Got(chunk));
        }
        self.partial.extend(chunk);
        if self.partial.len() == n {
            return Ok(Take::Got(std::mem::take(&mut self.partial)));
        }
        Ok(Take::NeedHeader)
    }

    /// Skips the zero padding up to the next phit boundary, then decodes and
    /// applies a frame header. Returns `false` if the header has not fully
    /// arrived yet.
    fn read_header(&mut self, out: &mut Vec<Token>) -> Result<bool, DesError> {
        let phit = self.cfg.phit_bytes as u64;
        let pad = ((phit - self.offset % phit) % phit) as usize;
        if self.buf.len() < pad + self.cfg.phit_bytes {
            return Ok(false);
        }
        if self.buf.iter().take(pad).any(|&b| b != 0) {
            return Err(self.protocol("nonzero padding before frame header"));
        }
        self.buf.drain(..pad);
        self.offset += pad as u64;
        let raw = self.consume(self.cfg.phit_bytes);
        let header = decode_frame_header(&raw, &self.cfg).map_err(|e| DesError::FrameProtocol {
            offset: self.offset - phit,
            reason: e.to_string(),
        })?;
        self.stats.frame_headers += 1;
        self.apply_header(header, out)?;
        Ok(true)
    }

    fn apply_header(&mut self, h: FrameHeader, out: &mut Vec<Token>) -> Result<(), DesError> {
        let level = h.list_level as usize;
        // Walk into lists until the stack's list depth matches the header.
        while self.list_depth < level {
            let idx = match self.pos {
                Pos::Visit(idx) => idx,
                Pos::ListBoundary => self.top().child_ptr,
                _ => return Err(self.protocol("frame header arrived mid-element")),
            };
            if self.rom.entries[idx].kind != RomKind::List {
                return Err(self.protocol(format!(
                    "header list level {level} exceeds depth {} reachable here",
                    self.list_depth
                )));
            }
            let tag = self.rom.entries[idx].start_tag.expect("checked in new");
            self.emit(out, tag, TokenKind::ListBegin);
            self.push(idx, CtxType::List, None)?;
        }
        if level < self.list_depth {
            return Err(self.protocol(format!(
                "header list level {level} below current depth {}",
                self.list_depth
            )));
        }
        if h.is_end_of_list() {
            if self.pos != Pos::ListBoundary || !self.partial.is_empty() {
                return Err(self.protocol("list closed mid-element"));
            }
            self.close_top(out);
        } else {
            self.frame_remaining = h.payload_bytes as usize;
        }
        Ok(())
    }

    fn check_trailing(&mut self) -> Result<(), DesError> {
        let phit = self.cfg.phit_bytes as u64;
        let pad = ((phit - self.offset % phit) % phit) as usize;
        if self.buf.len() > pad || self.buf.iter().any(|&b| b != 0) {
            return Err(DesError::TrailingData { offset: self.offset });
        }
        Ok(())
    }

    fn protocol(&self, reason: impl Into<String>) -> DesError {
        DesError::FrameProtocol {
            offset: self.offset,
            reason: reason.into(),
        }
    }
}
