// SPDX-License-Identifier: Apache-2.0

//! Byte-level wire contract shared by every engine.
//!
//! Everything is little-endian. A byte stream is packed into phits in
//! order, byte `i` landing at octet `i % phit_bytes` of phit
//! `i / phit_bytes`, and the last phit is zero-padded. Container counts are
//! fixed-width little-endian integers of `length_bytes` octets and are
//! byte-aligned, not phit-aligned.
//!
//! Frame headers occupy one whole phit:
//!
//! ```text
//! octet 0..4   payload byte count (u32 LE, unpadded)
//! octet 4      list level (>= 1)
//! octet 5..    zero
//! ```
//!
//! A frame payload is zero-padded to the next phit boundary, so headers are
//! always phit-aligned. A header with a zero payload count closes a list.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("invalid wire configuration: {0}")]
    BadConfig(String),
    #[error("{total_bytes} bytes cannot be carried by {phits} phits of {phit_bytes} bytes")]
    BadLength {
        total_bytes: usize,
        phits: usize,
        phit_bytes: usize,
    },
    #[error("phit is {actual} bytes wide, expected {expected}")]
    PhitWidth { expected: usize, actual: usize },
    #[error("count {value} does not fit in {length_bytes} bytes")]
    LengthOverflow { value: u64, length_bytes: usize },
    #[error("malformed frame header: {0}")]
    MalformedHeader(String),
    #[error("frame header list level must be at least 1")]
    BadListLevel,
}

/// Stream-wide wire parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WireConfig {
    pub phit_bytes: usize,
    pub length_bytes: usize,
    pub max_frame_payload_phits: usize,
    /// Context stack capacity of every engine built with this config.
    pub max_depth: usize,
}

impl Default for WireConfig {
    fn default() -> Self {
        WireConfig {
            phit_bytes: 16,
            length_bytes: 4,
            max_frame_payload_phits: 500,
            max_depth: 16,
        }
    }
}

/// Octets a frame header needs before the zero padding.
pub const FRAME_HEADER_BYTES: usize = 5;
/// Smallest phit width usable with list framing.
pub const MIN_FRAMED_PHIT_BYTES: usize = 8;

impl WireConfig {
    pub fn with_phit_bytes(mut self, phit_bytes: usize) -> Self {
        self.phit_bytes = phit_bytes;
        self
    }

    pub fn with_frame_phits(mut self, phits: usize) -> Self {
        self.max_frame_payload_phits = phits;
        self
    }

    /// Checks the invariants needed by unframed streams.
    pub fn validate(&self) -> Result<(), WireError> {
        if self.phit_bytes == 0 {
            return Err(WireError::BadConfig("phit width must be at least one byte".into()));
        }
        if !(1..=8).contains(&self.length_bytes) {
            return Err(WireError::BadConfig("length width must be 1..=8 bytes".into()));
        }
        if self.length_bytes > self.phit_bytes {
            return Err(WireError::BadConfig("length width exceeds phit width".into()));
        }
        if self.max_frame_payload_phits == 0 {
            return Err(WireError::BadConfig("frames must hold at least one phit".into()));
        }
        if self.max_depth == 0 {
            return Err(WireError::BadConfig("context stack capacity must be at least 1".into()));
        }
        Ok(())
    }

    /// Checks the additional invariants needed when lists are framed.
    pub fn validate_framed(&self) -> Result<(), WireError> {
        self.validate()?;
        if self.phit_bytes < MIN_FRAMED_PHIT_BYTES {
            return Err(WireError::BadConfig(format!(
                "framed streams need phits of at least {MIN_FRAMED_PHIT_BYTES} bytes"
            )));
        }
        if u32::try_from(self.frame_capacity()).is_err() {
            return Err(WireError::BadConfig("frame capacity exceeds 32-bit header field".into()));
        }
        Ok(())
    }

    /// Largest frame payload in bytes.
    pub fn frame_capacity(&self) -> usize {
        self.max_frame_payload_phits.saturating_mul(self.phit_bytes)
    }

    pub fn max_count(&self) -> u64 {
        if self.length_bytes >= 8 {
            u64::MAX
        } else {
            (1u64 << (8 * self.length_bytes)) - 1
        }
    }
}

/// One fixed-width unit of the stream.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Phit(Vec<u8>);

impl Phit {
    pub fn new(bytes: Vec<u8>) -> Self {
        Phit(bytes)
    }

    pub fn zeroed(width: usize) -> Self {
        Phit(vec![0; width])
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    /// Renders the phit as a little-endian hex integer, `0x56781234` style.
    pub fn to_le_hex(&self) -> String {
        let mut s = String::with_capacity(2 + 2 * self.0.len());
        s.push_str("0x");
        for b in self.0.iter().rev() {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    /// Builds a phit from a little-endian integer, for tests and examples.
    pub fn from_le_u128(value: u128, width: usize) -> Self {
        assert!(width <= 16);
        Phit(value.to_le_bytes()[..width].to_vec())
    }
}

impl fmt::Debug for Phit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Phit({})", self.to_le_hex())
    }
}

impl From<Vec<u8>> for Phit {
    fn from(bytes: Vec<u8>) -> Self {
        Phit(bytes)
    }
}

pub fn pack(bytes: &[u8], phit_bytes: usize) -> Vec<Phit> {
    assert!(phit_bytes > 0);
    bytes
        .chunks(phit_bytes)
        .map(|chunk| {
            let mut p = chunk.to_vec();
            p.resize(phit_bytes, 0);
            Phit(p)
        })
        .collect()
}

pub fn unpack(phits: &[Phit], total_bytes: usize) -> Result<Vec<u8>, WireError> {
    let width = phits.first().map_or(0, Phit::width);
    if let Some(bad) = phits.iter().find(|p| p.width() != width) {
        return Err(WireError::PhitWidth {
            expected: width,
            actual: bad.width(),
        });
    }
    let fits = total_bytes <= phits.len() * width;
    let tight = phits.is_empty() || total_bytes > (phits.len() - 1) * width;
    if !fits || !tight {
        return Err(WireError::BadLength {
            total_bytes,
            phits: phits.len(),
            phit_bytes: width,
        });
    }
    let mut out: Vec<u8> = phits.iter().flat_map(|p| p.0.iter().copied()).collect();
    out.truncate(total_bytes);
    Ok(out)
}

pub fn encode_length(n: u64, length_bytes: usize) -> Result<Vec<u8>, WireError> {
    assert!((1..=8).contains(&length_bytes));
    if length_bytes < 8 && n >> (8 * length_bytes) != 0 {
        return Err(WireError::LengthOverflow {
            value: n,
            length_bytes,
        });
    }
    Ok(n.to_le_bytes()[..length_bytes].to_vec())
}

pub fn decode_length(octets: &[u8]) -> u64 {
    assert!(octets.len() <= 8);
    let mut buf = [0u8; 8];
    buf[..octets.len()].copy_from_slice(octets);
    u64::from_le_bytes(buf)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrameHeader {
    pub payload_bytes: u32,
    pub list_level: u8,
}

impl FrameHeader {
    /// The empty frame that closes a list at `list_level`.
    pub fn end_of_list(list_level: u8) -> Self {
        FrameHeader {
            payload_bytes: 0,
            list_level,
        }
    }

    pub fn is_end_of_list(&self) -> bool {
        self.payload_bytes == 0
    }
}

pub fn encode_frame_header(h: FrameHeader, cfg: &WireConfig) -> Result<Phit, WireError> {
    cfg.validate_framed()?;
    if h.list_level == 0 {
        return Err(WireError::BadListLevel);
    }
    if h.payload_bytes as usize > cfg.frame_capacity() {
        return Err(WireError::MalformedHeader(format!(
            "payload of {} bytes exceeds frame capacity {}",
            h.payload_bytes,
            cfg.frame_capacity()
        )));
    }
    let mut p = vec![0u8; cfg.phit_bytes];
    p[..4].copy_from_slice(&h.payload_bytes.to_le_bytes());
    p[4] = h.list_level;
    Ok(Phit(p))
}

pub fn decode_frame_header(phit: &[u8], cfg: &WireConfig) -> Result<FrameHeader, WireError> {
    if phit.len() != cfg.phit_bytes {
        return Err(WireError::PhitWidth {
            expected: cfg.phit_bytes,
            actual: phit.len(),
        });
    }
    if phit.len() < FRAME_HEADER_BYTES {
        return Err(WireError::MalformedHeader("phit too narrow for a header".into()));
    }
    if let Some(i) = phit[FRAME_HEADER_BYTES..].iter().position(|&b| b != 0) {
        return Err(WireError::MalformedHeader(format!(
            "reserved octet {} is nonzero",
            i + FRAME_HEADER_BYTES
        )));
    }
    let payload_bytes = u32::from_le_bytes([phit[0], phit[1], phit[2], phit[3]]);
    let list_level = phit[4];
    if list_level == 0 {
        return Err(WireError::BadListLevel);
    }
    if payload_bytes as usize > cfg.frame_capacity() {
        return Err(WireError::MalformedHeader(format!(
            "payload of {payload_bytes} bytes exceeds frame capacity {}",
            cfg.frame_capacity()
        )));
    }
    Ok(FrameHeader {
        payload_bytes,
        list_level,
    })
}

/// Phits a frame with `payload_bytes` of data occupies on the wire,
/// header included.
pub fn frame_phits(payload_bytes: usize, phit_bytes: usize) -> usize {
    1 + payload_bytes.div_ceil(phit_bytes)
}
