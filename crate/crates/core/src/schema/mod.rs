// SPDX-License-Identifier: Apache-2.0

//! The JSON IDL: parsing, validation and normalization of message schemas.
//!
//! The grammar has exactly four type constructors:
//!
//! ```text
//! schema    ::= { structName : structDef, ... }
//! structDef ::= [ [fieldName, type], ... ]
//! type      ::= ["Bytes", n] | ["Struct", structName] | ["Array", type] | ["List", type]
//! ```
//!
//! Field order inside a struct is significant: it fixes both the wire order
//! and the token order.

mod client;
mod tree;
mod value;

use std::collections::HashMap;
use std::fmt;

use indexmap::IndexMap;
use serde_json::Value;
use thiserror::Error;

pub use client::{parse_client_schema, ClientSchema, Tag, DEFAULT_TAG_BITS};
pub use tree::{normalize, NodeKind, SchemaNode, SchemaTree, TokenSlot};
pub use value::{check_message, MessageValue};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemaError {
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("grammar violation at {path}: {reason}")]
    GrammarViolation { path: String, reason: String },
    #[error("unknown type constructor {name:?} at {path}")]
    UnknownTypeConstructor { path: String, name: String },
    #[error("schema is invalid:\n{0}")]
    Invalid(ValidationReport),
    #[error("client schema names unknown token path {0:?}")]
    UnknownPath(String),
    #[error("client schema has no tag for mandatory token {0:?}")]
    MissingMandatoryTag(String),
    #[error("tag {value} for {path:?} does not fit in {bits} bits")]
    TagOverflow { path: String, value: u64, bits: u32 },
}

/// A type expression as written in the IDL.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeExpr {
    Bytes(usize),
    Struct(String),
    Array(Box<TypeExpr>),
    List(Box<TypeExpr>),
}

impl TypeExpr {
    pub fn array(elem: TypeExpr) -> Self {
        TypeExpr::Array(Box::new(elem))
    }

    pub fn list(elem: TypeExpr) -> Self {
        TypeExpr::List(Box::new(elem))
    }

    pub fn to_json(&self) -> Value {
        match self {
            TypeExpr::Bytes(n) => serde_json::json!(["Bytes", n]),
            TypeExpr::Struct(name) => serde_json::json!(["Struct", name]),
            TypeExpr::Array(elem) => serde_json::json!(["Array", elem.to_json()]),
            TypeExpr::List(elem) => serde_json::json!(["List", elem.to_json()]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    pub name: String,
    pub ty: TypeExpr,
}

impl Field {
    pub fn new(name: impl Into<String>, ty: TypeExpr) -> Self {
        Field { name: name.into(), ty }
    }
}

/// A parsed central schema: named structs in declaration order plus the name
/// of the top-level message struct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaDef {
    pub structs: IndexMap<String, Vec<Field>>,
    pub message_name: String,
}

impl SchemaDef {
    pub fn new(message_name: impl Into<String>) -> Self {
        SchemaDef {
            structs: IndexMap::new(),
            message_name: message_name.into(),
        }
    }

    /// Builder-style helper, mostly for tests.
    pub fn with_struct(mut self, name: impl Into<String>, fields: Vec<Field>) -> Self {
        self.structs.insert(name.into(), fields);
        self
    }

    pub fn message_fields(&self) -> Option<&[Field]> {
        self.structs.get(&self.message_name).map(Vec::as_slice)
    }

    pub fn struct_fields(&self, name: &str) -> Option<&[Field]> {
        self.structs.get(name).map(Vec::as_slice)
    }

    /// Renders the schema back to IDL JSON.
    pub fn to_json(&self) -> Value {
        let mut map = serde_json::Map::new();
        for (name, fields) in &self.structs {
            let defs = fields
                .iter()
                .map(|f| serde_json::json!([f.name, f.ty.to_json()]))
                .collect();
            map.insert(name.clone(), Value::Array(defs));
        }
        Value::Object(map)
    }
}

/// Parses IDL text. `message_name` names the top-level struct; whether it
/// exists is checked by [`validate_schema`], not here.
pub fn parse_schema(idl_text: &str, message_name: &str) -> Result<SchemaDef, SchemaError> {
    let doc: Value =
        serde_json::from_str(idl_text).map_err(|e| SchemaError::MalformedJson(e.to_string()))?;
    let Value::Object(map) = doc else {
        return Err(grammar("$", "schema must be a JSON object of struct definitions"));
    };
    let mut def = SchemaDef::new(message_name);
    for (struct_name, body) in map {
        let Value::Array(items) = body else {
            return Err(grammar(&struct_name, "struct definition must be an array of fields"));
        };
        let mut fields = Vec::with_capacity(items.len());
        for (i, item) in items.into_iter().enumerate() {
            let at = format!("{struct_name}[{i}]");
            let Value::Array(pair) = item else {
                return Err(grammar(&at, "field must be a [fieldName, type] pair"));
            };
            let [name, ty] = <[Value; 2]>::try_from(pair)
                .map_err(|_| grammar(&at, "field must be a [fieldName, type] pair"))?;
            let Value::String(name) = name else {
                return Err(grammar(&at, "field name must be a string"));
            };
            let at = format!("{struct_name}.{name}");
            fields.push(Field::new(name, parse_type(&ty, &at)?));
        }
        def.structs.insert(struct_name, fields);
    }
    Ok(def)
}

fn parse_type(v: &Value, path: &str) -> Result<TypeExpr, SchemaError> {
    let Value::Array(items) = v else {
        return Err(grammar(path, "type must be a [constructor, argument] array"));
    };
    let [ctor, arg] = items.as_slice() else {
        return Err(grammar(path, "type must have exactly two elements"));
    };
    let Value::String(ctor) = ctor else {
        return Err(grammar(path, "type constructor must be a string"));
    };
    match ctor.as_str() {
        "Bytes" => {
            let n = arg
                .as_u64()
                .ok_or_else(|| grammar(path, "Bytes size must be a positive integer"))?;
            if n == 0 {
                return Err(grammar(path, "Bytes size must be at least 1"));
            }
            let n = usize::try_from(n).map_err(|_| grammar(path, "Bytes size is too large"))?;
            Ok(TypeExpr::Bytes(n))
        }
        "Struct" => match arg {
            Value::String(name) => Ok(TypeExpr::Struct(name.clone())),
            _ => Err(grammar(path, "Struct argument must be a struct name")),
        },
        "Array" => Ok(TypeExpr::array(parse_type(arg, &format!("{path}[]"))?)),
        "List" => Ok(TypeExpr::list(parse_type(arg, &format!("{path}[]"))?)),
        other => Err(SchemaError::UnknownTypeConstructor {
            path: path.to_string(),
            name: other.to_string(),
        }),
    }
}

fn grammar(path: &str, reason: &str) -> SchemaError {
    SchemaError::GrammarViolation {
        path: path.to_string(),
        reason: reason.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    MissingMessageStruct,
    UnresolvedStructRef(String),
    RecursiveStruct(String),
    DuplicateField(String),
    EmptyFieldName,
    /// Field names may not contain `.`; it is the path separator.
    InvalidFieldName(String),
    ZeroSizeBytes,
    /// An array or list whose element type flattens to no fields at all.
    EmptyContainerElement,
    LengthMismatch { expected: usize, actual: usize },
    ArityMismatch { expected: usize, actual: usize },
    KindMismatch { expected: &'static str, actual: &'static str },
    HeterogeneousElements,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {:?}", self.path, self.kind)
    }
}

/// Outcome of a validation pass. Violations are data, not errors.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub(crate) fn push(&mut self, path: impl Into<String>, kind: ViolationKind) {
        self.violations.push(Violation {
            path: path.into(),
            kind,
        });
    }

    pub fn has(&self, pred: impl Fn(&ViolationKind) -> bool) -> bool {
        self.violations.iter().any(|v| pred(&v.kind))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every structural invariant of a [`SchemaDef`] and reports all
/// violations found.
pub fn validate_schema(def: &SchemaDef) -> ValidationReport {
    let mut report = ValidationReport::default();
    if !def.structs.contains_key(&def.message_name) {
        report.push(def.message_name.clone(), ViolationKind::MissingMessageStruct);
    }
    for (sname, fields) in &def.structs {
        let mut seen = HashMap::new();
        for field in fields {
            let at = format!("{sname}.{}", field.name);
            if field.name.is_empty() {
                report.push(at.clone(), ViolationKind::EmptyFieldName);
            } else if field.name.contains('.') {
                report.push(at.clone(), ViolationKind::InvalidFieldName(field.name.clone()));
            }
            if seen.insert(field.name.as_str(), ()).is_some() {
                report.push(at.clone(), ViolationKind::DuplicateField(field.name.clone()));
            }
            check_type_refs(def, &field.ty, &at, &mut report);
        }
    }
    // Cycle detection over the struct-reference graph.
    let mut state: HashMap<&str, Visit> = HashMap::new();
    for sname in def.structs.keys() {
        find_cycles(def, sname, &mut state, &mut report);
    }
    if !report.has(|k| matches!(k, ViolationKind::RecursiveStruct(_))) {
        let mut memo = HashMap::new();
        for (sname, fields) in &def.structs {
            for field in fields {
                let at = format!("{sname}.{}", field.name);
                check_elements(def, &field.ty, &at, &mut memo, &mut report);
            }
        }
    }
    report
}

fn check_type_refs(def: &SchemaDef, ty: &TypeExpr, at: &str, report: &mut ValidationReport) {
    match ty {
        TypeExpr::Bytes(0) => report.push(at, ViolationKind::ZeroSizeBytes),
        TypeExpr::Bytes(_) => {}
        TypeExpr::Struct(name) => {
            if !def.structs.contains_key(name) {
                report.push(at, ViolationKind::UnresolvedStructRef(name.clone()));
            }
        }
        TypeExpr::Array(elem) | TypeExpr::List(elem) => {
            check_type_refs(def, elem, &format!("{at}[]"), report)
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Visit {
    Active,
    Finished,
}

fn struct_refs(ty: &TypeExpr) -> Option<&str> {
    match ty {
        TypeExpr::Bytes(_) => None,
        TypeExpr::Struct(name) => Some(name),
        TypeExpr::Array(elem) | TypeExpr::List(elem) => struct_refs(elem),
    }
}

fn find_cycles<'a>(
    def: &'a SchemaDef,
    sname: &'a str,
    state: &mut HashMap<&'a str, Visit>,
    report: &mut ValidationReport,
) {
    match state.get(sname) {
        Some(Visit::Finished) => return,
        Some(Visit::Active) => {
            report.push(sname, ViolationKind::RecursiveStruct(sname.to_string()));
            return;
        }
        None => {}
    }
    let Some(fields) = def.structs.get(sname) else {
        return;
    };
    state.insert(sname, Visit::Active);
    for field in fields {
        if let Some((key, _)) = struct_refs(&field.ty).and_then(|t| def.structs.get_key_value(t)) {
            find_cycles(def, key, state, report);
        }
    }
    state.insert(sname, Visit::Finished);
}

/// Number of tree nodes a type contributes once structs are inlined.
fn flat_width<'a>(def: &'a SchemaDef, ty: &'a TypeExpr, memo: &mut HashMap<&'a str, usize>) -> usize {
    match ty {
        TypeExpr::Bytes(_) | TypeExpr::Array(_) | TypeExpr::List(_) => 1,
        TypeExpr::Struct(name) => {
            if let Some(&w) = memo.get(name.as_str()) {
                return w;
            }
            let w = def
                .structs
                .get(name)
                .map(|fields| fields.iter().map(|f| flat_width(def, &f.ty, memo)).sum())
                .unwrap_or(1);
            memo.insert(name, w);
            w
        }
    }
}

fn check_elements<'a>(
    def: &'a SchemaDef,
    ty: &'a TypeExpr,
    at: &str,
    memo: &mut HashMap<&'a str, usize>,
    report: &mut ValidationReport,
) {
    if let TypeExpr::Array(elem) | TypeExpr::List(elem) = ty {
        if flat_width(def, elem, memo) == 0 {
            report.push(at, ViolationKind::EmptyContainerElement);
        }
        check_elements(def, elem, &format!("{at}[]"), memo, report);
    }
}
