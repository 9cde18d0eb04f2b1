// SPDX-License-Identifier: Apache-2.0

//! Schema-driven streaming serialization for hardware message passing.
//!
//! A message schema is written in a small JSON IDL with four type
//! constructors (`Bytes`, `Struct`, `Array`, `List`). The schema is
//! normalized into a tree whose internal nodes are arrays and lists, and the
//! tree is flattened into a [`RomImage`]. The streaming engines in [`des`]
//! and [`ser`] walk that ROM with a bounded context stack and translate
//! between fixed-width phit streams and token streams, one phit or one token
//! at a time.
//!
//! The crate also carries the software side of the protocol
//! ([`codec`]: store-and-forward serializer and deserializers plus the
//! reference tokenizer) and a loopback throughput model ([`sim`]).

pub mod codec;
pub mod des;
pub mod rom;
pub mod schema;
pub mod ser;
pub mod sim;
pub mod tokens;
pub mod wire;

pub use codec::CodecError;
pub use des::{DesEngine, DesError, DesMode, DesSummary};
pub use rom::{RomEntry, RomImage, RomKind, RomStats};
pub use schema::{
    ClientSchema, MessageValue, SchemaDef, SchemaError, SchemaNode, SchemaTree, Tag, TypeExpr,
    ValidationReport, Violation,
};
pub use ser::{SerEngine, SerError, SerMode, SerOutput, SerToken};
pub use tokens::{Token, TokenKind};
pub use wire::{FrameHeader, Phit, WireConfig, WireError};
