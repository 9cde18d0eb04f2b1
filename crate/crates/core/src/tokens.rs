// SPDX-License-Identifier: Apache-2.0

//! Deserializer output tokens and the `.tokens` text format.
//!
//! Tagged lines are `tag kind payload`; untagged serializer-input lines
//! are `kind payload`. Data payloads are lowercase hex, array lengths and
//! list levels are decimal, and `-` stands for no payload. Blank lines and
//! lines starting with `#` are ignored.

use std::fmt;

use thiserror::Error;

use crate::schema::Tag;
use crate::ser::SerToken;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Data(Vec<u8>),
    ArrayLength(u64),
    ListBegin,
    ArrayEnd,
    ListEnd,
}

impl TokenKind {
    pub fn is_data(&self) -> bool {
        matches!(self, TokenKind::Data(_))
    }
}

/// A token as delivered to user logic: a tag plus its payload.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub tag: Tag,
    pub kind: TokenKind,
}

impl Token {
    pub fn new(tag: Tag, kind: TokenKind) -> Self {
        Token { tag, kind }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            TokenKind::Data(b) => write!(f, "{} data {}", self.tag, hex::encode(b)),
            TokenKind::ArrayLength(n) => write!(f, "{} array-length {n}", self.tag),
            TokenKind::ListBegin => write!(f, "{} list-begin -", self.tag),
            TokenKind::ArrayEnd => write!(f, "{} array-end -", self.tag),
            TokenKind::ListEnd => write!(f, "{} list-end -", self.tag),
        }
    }
}

impl fmt::Display for SerToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SerToken::Data(b) => write!(f, "data {}", hex::encode(b)),
            SerToken::ArrayLength(n) => write!(f, "array-length {n}"),
            SerToken::ListEnd(level) => write!(f, "list-end {level}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {reason}")]
pub struct TokenParseError {
    pub line: usize,
    pub reason: String,
}

fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.trim();
        (!l.is_empty() && !l.starts_with('#')).then(|| (i + 1, l.split_whitespace().collect()))
    })
}

fn bad(line: usize, reason: impl Into<String>) -> TokenParseError {
    TokenParseError {
        line,
        reason: reason.into(),
    }
}

pub fn write_tokens(tokens: &[Token]) -> String {
    tokens.iter().map(|t| format!("{t}\n")).collect()
}

pub fn write_ser_tokens(tokens: &[SerToken]) -> String {
    tokens.iter().map(|t| format!("{t}\n")).collect()
}

pub fn parse_tokens(text: &str) -> Result<Vec<Token>, TokenParseError> {
    let mut out = Vec::new();
    for (line, fields) in lines(text) {
        let [tag, kind, payload] = fields.as_slice() else {
            return Err(bad(line, "expected `tag kind payload`"));
        };
        let tag = tag.parse::<u64>().map_err(|_| bad(line, "tag is not an integer"))?;
        let kind = match *kind {
            "data" => TokenKind::Data(hex::decode(payload).map_err(|e| bad(line, e.to_string()))?),
            "array-length" => {
                TokenKind::ArrayLength(payload.parse().map_err(|_| bad(line, "bad array length"))?)
            }
            "list-begin" | "array-end" | "list-end" if *payload != "-" => {
                return Err(bad(line, "control token takes no payload"))
            }
            "list-begin" => TokenKind::ListBegin,
            "array-end" => TokenKind::ArrayEnd,
            "list-end" => TokenKind::ListEnd,
            other => return Err(bad(line, format!("unknown token kind {other:?}"))),
        };
        out.push(Token::new(Tag(tag), kind));
    }
    Ok(out)
}

pub fn parse_ser_tokens(text: &str) -> Result<Vec<SerToken>, TokenParseError> {
    let mut out = Vec::new();
    for (line, fields) in lines(text) {
        let [kind, payload] = fields.as_slice() else {
            return Err(bad(line, "expected `kind payload`"));
        };
        out.push(match *kind {
            "data" => SerToken::Data(hex::decode(payload).map_err(|e| bad(line, e.to_string()))?),
            "array-length" => {
                SerToken::ArrayLength(payload.parse().map_err(|_| bad(line, "bad array length"))?)
            }
            "list-end" => SerToken::ListEnd(payload.parse().map_err(|_| bad(line, "bad list level"))?),
            other => return Err(bad(line, format!("unknown token kind {other:?}"))),
        });
    }
    Ok(out)
}
