//! Domain value types and the sign repository.

mod dimension;
mod registry;
mod sign;
mod value;

pub use dimension::Dimension;
pub use registry::{RegistryError, SharedSignRegistry, SignRegistry};
pub use sign::{Cybersign, DimensionalDyad, SignError};
pub use value::{greek_name, transliterate, Reference, SemanticValue, UnitCode, ValueError, ValueKind};

pub(crate) use value::unquote_text;
