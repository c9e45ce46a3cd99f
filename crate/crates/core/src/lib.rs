//! Reference implementation of a four-dimensional Cyberlanguage.
//!
//! The crate is layered bottom-up:
//!
//! * [`bus`]: wire framing, the semantic broker, simulated agents and the corpus log
//! * [`cybersign`]: value types, units, dyads and the sign repository
//! * [`fdsg`]: the statement grammar: lexer, parser, AST, canonical printer
//! * [`semantics`]: cross-dimensional mappings, context, weights and meaning evaluation
//! * [`compiler`]: dialects and per-recipient surface forms
//!
//! [`negotiation`] implements the meaning negotiation protocol used when a
//! statement cannot be disambiguated from context alone.

pub mod bus;
pub mod compiler;
pub mod cybersign;
pub mod digest;
pub mod fdsg;
pub mod ids;
pub mod json;
pub mod negotiation;
pub mod semantics;

pub use cybersign::{Cybersign, Dimension, Reference, SemanticValue, SignRegistry, UnitCode};
pub use fdsg::{parse, print_canonical, Cyberstatement};
pub use ids::IdGenerator;
