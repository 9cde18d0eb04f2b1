// SPDX-License-Identifier: Apache-2.0

use super::{SchemaDef, TypeExpr, ValidationReport, ViolationKind};

/// A message instance shaped like the IDL schema (before normalization).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MessageValue {
    Bytes(Vec<u8>),
    Struct(Vec<MessageValue>),
    Array(Vec<MessageValue>),
    List(Vec<MessageValue>),
}

impl MessageValue {
    pub fn kind_name(&self) -> &'static str {
        match self {
            MessageValue::Bytes(_) => "bytes",
            MessageValue::Struct(_) => "struct",
            MessageValue::Array(_) => "array",
            MessageValue::List(_) => "list",
        }
    }
}

fn expected_name(ty: &TypeExpr) -> &'static str {
    match ty {
        TypeExpr::Bytes(_) => "bytes",
        TypeExpr::Struct(_) => "struct",
        TypeExpr::Array(_) => "array",
        TypeExpr::List(_) => "list",
    }
}

/// One step of the path to a value; rendered only when a violation is
/// reported.
#[derive(Clone, Copy)]
enum Seg<'a> {
    Field(&'a str),
    Index(usize),
}

fn render(root: &str, segs: &[Seg]) -> String {
    let mut s = root.to_string();
    for seg in segs {
        match seg {
            Seg::Field(f) => {
                s.push('.');
                s.push_str(f);
            }
            Seg::Index(i) => s.push_str(&format!("[{i}]")),
        }
    }
    s
}

/// Shape-checks `value` against the message struct of `def`.
pub fn check_message(value: &MessageValue, def: &SchemaDef) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut c = Checker {
        def,
        segs: Vec::new(),
        report: &mut report,
    };
    c.check(value, &TypeExpr::Struct(def.message_name.clone()));
    report
}

struct Checker<'a> {
    def: &'a SchemaDef,
    segs: Vec<Seg<'a>>,
    report: &'a mut ValidationReport,
}

impl<'a> Checker<'a> {
    fn push(&mut self, kind: ViolationKind) {
        let at = render(&self.def.message_name, &self.segs);
        self.report.push(at, kind);
    }

    fn check(&mut self, v: &MessageValue, ty: &'a TypeExpr) {
        match (ty, v) {
            (TypeExpr::Bytes(n), MessageValue::Bytes(b)) => {
                if b.len() != *n {
                    self.push(ViolationKind::LengthMismatch {
                        expected: *n,
                        actual: b.len(),
                    });
                }
            }
            (TypeExpr::Struct(name), MessageValue::Struct(items)) => {
                let Some(fields) = self.def.struct_fields(name) else {
                    self.push(ViolationKind::UnresolvedStructRef(name.clone()));
                    return;
                };
                if fields.len() != items.len() {
                    self.push(ViolationKind::ArityMismatch {
                        expected: fields.len(),
                        actual: items.len(),
                    });
                    return;
                }
                for (field, item) in fields.iter().zip(items) {
                    self.segs.push(Seg::Field(&field.name));
                    self.check(item, &field.ty);
                    self.segs.pop();
                }
            }
            (TypeExpr::Array(elem), MessageValue::Array(items))
            | (TypeExpr::List(elem), MessageValue::List(items)) => {
                if let Some(first) = items.first() {
                    let kind = std::mem::discriminant(first);
                    if items.iter().any(|i| std::mem::discriminant(i) != kind) {
                        self.push(ViolationKind::HeterogeneousElements);
                        return;
                    }
                }
                for (i, item) in items.iter().enumerate() {
                    self.segs.push(Seg::Index(i));
                    self.check(item, elem);
                    self.segs.pop();
                }
            }
            (ty, v) => self.push(ViolationKind::KindMismatch {
                expected: expected_name(ty),
                actual: v.kind_name(),
            }),
        }
    }
}
