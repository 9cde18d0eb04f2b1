// SPDX-License-Identifier: Apache-2.0

//! Store-and-forward software side.
//!
//! [`sw_serialize`] writes a whole message with every container count in
//! front of its elements. [`sw_deserialize_reverse`] reads the layout the
//! serializer produces in to-software mode, where counts trail their
//! elements, by walking the buffer from the end.
//!
//! [`oracle_tokenize`] is the reference tokenizer. It recurses over the IDL
//! types directly and never touches the schema tree or ROM, so it can be
//! used to check both engines.

use serde_json::Value;
use thiserror::Error;

use crate::schema::{check_message, ClientSchema, MessageValue, SchemaDef, Tag, TypeExpr, ValidationReport};
use crate::ser::SerToken;
use crate::tokens::{Token, TokenKind};
use crate::wire::{decode_length, encode_length, WireConfig, WireError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("message does not match schema:\n{0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("buffer truncated at byte {offset}: {needed} more bytes needed")]
    Truncated { offset: usize, needed: usize },
    #[error("{count} unread bytes left in buffer")]
    TrailingBytes { count: usize },
    #[error("count {value} at byte {offset} is larger than the buffer allows")]
    CountOverflow { value: u64, offset: usize },
    #[error("unbalanced token stream at token {index}: {reason}")]
    UnbalancedStream { index: usize, reason: String },
    #[error("token {index} does not fit the schema: {reason}")]
    TokenMismatch { index: usize, reason: String },
    #[error("malformed message JSON at {path}: {reason}")]
    MalformedJson { path: String, reason: String },
}

fn fields_of<'a>(def: &'a SchemaDef, name: &str) -> &'a [crate::schema::Field] {
    def.struct_fields(name).expect("message was checked against the schema")
}

fn message_type(def: &SchemaDef) -> TypeExpr {
    TypeExpr::Struct(def.message_name.clone())
}

fn ensure_valid(value: &MessageValue, def: &SchemaDef) -> Result<(), CodecError> {
    let report = check_message(value, def);
    if report.is_empty() {
        Ok(())
    } else {
        Err(CodecError::Invalid(report))
    }
}

// ---------------------------------------------------------------- forward

pub fn sw_serialize(value: &MessageValue, def: &SchemaDef, cfg: &WireConfig) -> Result<Vec<u8>, CodecError> {
    ensure_valid(value, def)?;
    let mut out = Vec::new();
    write_value(value, &message_type(def), def, cfg, &mut out)?;
    Ok(out)
}

fn write_value(
    v: &MessageValue,
    ty: &TypeExpr,
    def: &SchemaDef,
    cfg: &WireConfig,
    out: &mut Vec<u8>,
) -> Result<(), CodecError> {
    match (ty, v) {
        (TypeExpr::Bytes(_), MessageValue::Bytes(b)) => out.extend_from_slice(b),
        (TypeExpr::Struct(name), MessageValue::Struct(items)) => {
            for (field, item) in fields_of(def, name).iter().zip(items) {
                write_value(item, &field.ty, def, cfg, out)?;
            }
        }
        (TypeExpr::Array(elem), MessageValue::Array(items)) | (TypeExpr::List(elem), MessageValue::List(items)) => {
            out.extend(encode_length(items.len() as u64, cfg.length_bytes)?);
            for item in items {
                write_value(item, elem, def, cfg, out)?;
            }
        }
        _ => unreachable!("shape checked by check_message"),
    }
    Ok(())
}

struct Forward<'a> {
    buf: &'a [u8],
    at: usize,
}

impl Forward<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], CodecError> {
        let end = self.at + n;
        if end > self.buf.len() {
            return Err(CodecError::Truncated {
                offset: self.at,
                needed: end - self.buf.len(),
            });
        }
        let s = &self.buf[self.at..end];
        self.at = end;
        Ok(s)
    }
}

pub fn sw_deserialize_forward(bytes: &[u8], def: &SchemaDef, cfg: &WireConfig) -> Result<MessageValue, CodecError> {
    let mut r = Forward { buf: bytes, at: 0 };
    let v = read_forward(&mut r, &message_type(def), def, cfg)?;
    if r.at != bytes.len() {
        return Err(CodecError::TrailingBytes {
            count: bytes.len() - r.at,
        });
    }
    Ok(v)
}

fn read_forward(r: &mut Forward, ty: &TypeExpr, def: &SchemaDef, cfg: &WireConfig) -> Result<MessageValue, CodecError> {
    Ok(match ty {
        TypeExpr::Bytes(n) => MessageValue::Bytes(r.take(*n)?.to_vec()),
        TypeExpr::Struct(name) => MessageValue::Struct(
            fields_of(def, name)
                .iter()
                .map(|f| read_forward(r, &f.ty, def, cfg))
                .collect::<Result<_, _>>()?,
        ),
        TypeExpr::Array(elem) | TypeExpr::List(elem) => {
            let offset = r.at;
            let n = decode_length(r.take(cfg.length_bytes)?);
            // Every element occupies at least one byte.
            if n > (r.buf.len() - r.at) as u64 {
                return Err(CodecError::CountOverflow { value: n, offset });
            }
            let items = (0..n)
                .map(|_| read_forward(r, elem, def, cfg))
                .collect::<Result<_, _>>()?;
            if matches!(ty, TypeExpr::Array(_)) {
                MessageValue::Array(items)
            } else {
                MessageValue::List(items)
            }
        }
    })
}

// ---------------------------------------------------------------- reverse

struct Backward<'a> {
    buf: &'a [u8],
    /// Exclusive end of the unread region.
    end: usize,
}

impl Backward<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], CodecError> {
        if n > self.end {
            return Err(CodecError::Truncated {
                offset: self.end,
                needed: n - self.end,
            });
        }
        self.end -= n;
        Ok(&self.buf[self.end..self.end + n])
    }
}

/// Reads a buffer whose container counts follow their elements.
pub fn sw_deserialize_reverse(bytes: &[u8], def: &SchemaDef, cfg: &WireConfig) -> Result<MessageValue, CodecError> {
    let mut r = Backward {
        buf: bytes,
        end: bytes.len(),
    };
    let v = read_backward(&mut r, &message_type(def), def, cfg)?;
    if r.end != 0 {
        return Err(CodecError::TrailingBytes { count: r.end });
    }
    Ok(v)
}

fn read_backward(r: &mut Backward, ty: &TypeExpr, def: &SchemaDef, cfg: &WireConfig) -> Result<MessageValue, CodecError> {
    Ok(match ty {
        TypeExpr::Bytes(n) => MessageValue::Bytes(r.take(*n)?.to_vec()),
        TypeExpr::Struct(name) => {
            let mut items = fields_of(def, name)
                .iter()
                .rev()
                .map(|f| read_backward(r, &f.ty, def, cfg))
                .collect::<Result<Vec<_>, _>>()?;
            items.reverse();
            MessageValue::Struct(items)
        }
        TypeExpr::Array(elem) | TypeExpr::List(elem) => {
            let n = decode_length(r.take(cfg.length_bytes)?);
            if n > r.end as u64 {
                return Err(CodecError::CountOverflow { value: n, offset: r.end });
            }
            let mut items = (0..n)
                .map(|_| read_backward(r, elem, def, cfg))
                .collect::<Result<Vec<_>, _>>()?;
            items.reverse();
            if matches!(ty, TypeExpr::Array(_)) {
                MessageValue::Array(items)
            } else {
                MessageValue::List(items)
            }
        }
    })
}

// ---------------------------------------------------------------- oracle

fn dot(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

/// Tags resolved per type position, so tokenizing a long container does
/// not rebuild paths for every element.
enum Plan {
    Bytes(Tag),
    Struct(Vec<Plan>),
    Array { start: Tag, end: Option<Tag>, elem: Box<Plan> },
    List { start: Tag, end: Tag, elem: Box<Plan> },
}

fn plan(ty: &TypeExpr, path: &str, def: &SchemaDef, client: &ClientSchema) -> Plan {
    let tag = |p: &str| client.tag(p).unwrap_or_else(|| panic!("no tag for {p:?}"));
    match ty {
        TypeExpr::Bytes(_) => Plan::Bytes(tag(path)),
        TypeExpr::Struct(name) => Plan::Struct(
            fields_of(def, name)
                .iter()
                .map(|f| plan(&f.ty, &dot(path, &f.name), def, client))
                .collect(),
        ),
        TypeExpr::Array(elem) | TypeExpr::List(elem) => {
            let elem_path = match **elem {
                TypeExpr::Bytes(_) => dot(path, "elem.value"),
                _ => dot(path, "elem"),
            };
            let start = tag(&dot(path, "start"));
            let elem = Box::new(plan(elem, &elem_path, def, client));
            if matches!(ty, TypeExpr::Array(_)) {
                Plan::Array {
                    start,
                    end: client.tag(&dot(path, "end")),
                    elem,
                }
            } else {
                Plan::List {
                    start,
                    end: tag(&dot(path, "end")),
                    elem,
                }
            }
        }
    }
}

/// Reference token stream for `value`, with tags looked up by path.
pub fn oracle_tokenize(value: &MessageValue, def: &SchemaDef, client: &ClientSchema) -> Vec<Token> {
    let plan = plan(&message_type(def), "", def, client);
    let mut out = Vec::new();
    oracle(value, &plan, &mut out);
    out
}

/// Length of [`oracle_tokenize`]'s output, without building it.
pub fn oracle_token_count(value: &MessageValue, def: &SchemaDef, client: &ClientSchema) -> usize {
    count(value, &plan(&message_type(def), "", def, client))
}

fn count(v: &MessageValue, plan: &Plan) -> usize {
    match (plan, v) {
        (Plan::Bytes(_), MessageValue::Bytes(_)) => 1,
        (Plan::Struct(fields), MessageValue::Struct(items)) => {
            fields.iter().zip(items).map(|(f, item)| count(item, f)).sum()
        }
        (Plan::Array { end, elem, .. }, MessageValue::Array(items)) => {
            1 + usize::from(end.is_some()) + items.iter().map(|item| count(item, elem)).sum::<usize>()
        }
        (Plan::List { elem, .. }, MessageValue::List(items)) => {
            2 + items.iter().map(|item| count(item, elem)).sum::<usize>()
        }
        _ => panic!("message does not match schema"),
    }
}

fn oracle(v: &MessageValue, plan: &Plan, out: &mut Vec<Token>) {
    match (plan, v) {
        (Plan::Bytes(tag), MessageValue::Bytes(b)) => out.push(Token::new(*tag, TokenKind::Data(b.clone()))),
        (Plan::Struct(fields), MessageValue::Struct(items)) => {
            for (field, item) in fields.iter().zip(items) {
                oracle(item, field, out);
            }
        }
        (Plan::Array { start, end, elem }, MessageValue::Array(items)) => {
            out.push(Token::new(*start, TokenKind::ArrayLength(items.len() as u64)));
            for item in items {
                oracle(item, elem, out);
            }
            if let Some(end) = end {
                out.push(Token::new(*end, TokenKind::ArrayEnd));
            }
        }
        (Plan::List { start, end, elem }, MessageValue::List(items)) => {
            out.push(Token::new(*start, TokenKind::ListBegin));
            for item in items {
                oracle(item, elem, out);
            }
            out.push(Token::new(*end, TokenKind::ListEnd));
        }
        _ => panic!("message does not match schema"),
    }
}

/// Converts a deserializer token stream into serializer input.
pub fn adapt_tokens(tokens: &[Token]) -> Result<Vec<SerToken>, CodecError> {
    adapt_owned(tokens.to_vec())
}

/// [`adapt_tokens`] that reuses the leaf buffers.
pub fn adapt_owned(tokens: Vec<Token>) -> Result<Vec<SerToken>, CodecError> {
    let total = tokens.len();
    let mut depth = 0u32;
    let mut out = Vec::with_capacity(total);
    for (index, t) in tokens.into_iter().enumerate() {
        match t.kind {
            TokenKind::Data(b) => out.push(SerToken::Data(b)),
            TokenKind::ArrayLength(n) => out.push(SerToken::ArrayLength(n)),
            TokenKind::ArrayEnd => {}
            TokenKind::ListBegin => depth += 1,
            TokenKind::ListEnd => {
                if depth == 0 {
                    return Err(CodecError::UnbalancedStream {
                        index,
                        reason: "list-end without list-begin".into(),
                    });
                }
                out.push(SerToken::ListEnd(depth));
                depth -= 1;
            }
        }
    }
    if depth != 0 {
        return Err(CodecError::UnbalancedStream {
            index: total,
            reason: format!("{depth} lists left open"),
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------- tokens -> value

/// Rebuilds a message from a deserializer token stream. Tags are ignored;
/// the client schema says which arrays carry an end token.
pub fn value_from_tokens(tokens: &[Token], def: &SchemaDef, client: &ClientSchema) -> Result<MessageValue, CodecError> {
    let mut at = 0;
    let v = from_tokens(tokens, &mut at, &message_type(def), "", def, client)?;
    if at != tokens.len() {
        return Err(CodecError::TokenMismatch {
            index: at,
            reason: "tokens after end of message".into(),
        });
    }
    Ok(v)
}

fn from_tokens(
    tokens: &[Token],
    at: &mut usize,
    ty: &TypeExpr,
    path: &str,
    def: &SchemaDef,
    client: &ClientSchema,
) -> Result<MessageValue, CodecError> {
    let mismatch = |index: usize, reason: String| CodecError::TokenMismatch { index, reason };
    let next = |at: &mut usize| -> Result<TokenKind, CodecError> {
        let t = tokens
            .get(*at)
            .ok_or_else(|| mismatch(*at, "token stream ended early".into()))?;
        *at += 1;
        Ok(t.kind.clone())
    };
    Ok(match ty {
        TypeExpr::Bytes(n) => match next(at)? {
            TokenKind::Data(b) if b.len() == *n => MessageValue::Bytes(b),
            other => return Err(mismatch(*at - 1, format!("expected {n}-byte data at {path}, got {other:?}"))),
        },
        TypeExpr::Struct(name) => {
            let mut items = Vec::new();
            for f in fields_of(def, name) {
                items.push(from_tokens(tokens, at, &f.ty, &dot(path, &f.name), def, client)?);
            }
            MessageValue::Struct(items)
        }
        TypeExpr::Array(elem) => {
            let n = match next(at)? {
                TokenKind::ArrayLength(n) => n,
                other => return Err(mismatch(*at - 1, format!("expected array length at {path}, got {other:?}"))),
            };
            let mut items = Vec::new();
            for _ in 0..n {
                items.push(from_tokens(tokens, at, elem, &dot(path, "elem"), def, client)?);
            }
            if client.tag(&dot(path, "end")).is_some() {
                match next(at)? {
                    TokenKind::ArrayEnd => {}
                    other => return Err(mismatch(*at - 1, format!("expected array end at {path}, got {other:?}"))),
                }
            }
            MessageValue::Array(items)
        }
        TypeExpr::List(elem) => {
            match next(at)? {
                TokenKind::ListBegin => {}
                other => return Err(mismatch(*at - 1, format!("expected list begin at {path}, got {other:?}"))),
            }
            let mut items = Vec::new();
            while tokens.get(*at).map(|t| &t.kind) != Some(&TokenKind::ListEnd) {
                if *at >= tokens.len() {
                    return Err(mismatch(*at, "token stream ended inside a list".into()));
                }
                items.push(from_tokens(tokens, at, elem, &dot(path, "elem"), def, client)?);
            }
            *at += 1;
            MessageValue::List(items)
        }
    })
}

// ---------------------------------------------------------------- JSON

/// Byte fields become lowercase hex strings; structs, arrays and lists
/// become JSON arrays.
pub fn message_to_json(value: &MessageValue) -> Value {
    match value {
        MessageValue::Bytes(b) => Value::String(hex::encode(b)),
        MessageValue::Struct(items) | MessageValue::Array(items) | MessageValue::List(items) => {
            Value::Array(items.iter().map(message_to_json).collect())
        }
    }
}

pub fn message_from_json(doc: &Value, def: &SchemaDef) -> Result<MessageValue, CodecError> {
    let v = json_value(doc, &message_type(def), &def.message_name, def)?;
    ensure_valid(&v, def)?;
    Ok(v)
}

pub fn parse_message(text: &str, def: &SchemaDef) -> Result<MessageValue, CodecError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| CodecError::MalformedJson {
        path: "$".into(),
        reason: e.to_string(),
    })?;
    message_from_json(&doc, def)
}

fn json_value(doc: &Value, ty: &TypeExpr, at: &str, def: &SchemaDef) -> Result<MessageValue, CodecError> {
    let bad = |reason: &str| CodecError::MalformedJson {
        path: at.to_string(),
        reason: reason.to_string(),
    };
    match ty {
        TypeExpr::Bytes(_) => {
            let s = doc.as_str().ok_or_else(|| bad("expected a hex string"))?;
            Ok(MessageValue::Bytes(hex::decode(s).map_err(|e| bad(&e.to_string()))?))
        }
        TypeExpr::Struct(name) => {
            let items = doc.as_array().ok_or_else(|| bad("expected an array of fields"))?;
            let fields = def.struct_fields(name).ok_or_else(|| bad("unknown struct"))?;
            if items.len() != fields.len() {
                return Err(bad(&format!("expected {} fields, got {}", fields.len(), items.len())));
            }
            fields
                .iter()
                .zip(items)
                .map(|(f, item)| json_value(item, &f.ty, &format!("{at}.{}", f.name), def))
                .collect::<Result<_, _>>()
                .map(MessageValue::Struct)
        }
        TypeExpr::Array(elem) | TypeExpr::List(elem) => {
            let items = doc.as_array().ok_or_else(|| bad("expected an array of elements"))?;
            let items = items
                .iter()
                .enumerate()
                .map(|(i, item)| json_value(item, elem, &format!("{at}[{i}]"), def))
                .collect::<Result<_, _>>()?;
            Ok(if matches!(ty, TypeExpr::Array(_)) {
                MessageValue::Array(items)
            } else {
                MessageValue::List(items)
            })
        }
    }
}
