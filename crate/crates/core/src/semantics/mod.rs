//! Cross-dimensional mappings, context snapshots, dimension weights and the
//! meaning of a statement in context.

mod context;
mod disambiguate;
mod fusion;
mod mapping;
mod meaning;
mod weights;

use thiserror::Error;

use crate::cybersign::{Cybersign, Dimension};

pub use context::{ContextSlot, ContextSnapshot};
pub use disambiguate::{disambiguate, disambiguate_with_prior, score, Disambiguation};
pub use fusion::{check_fusion, CoherenceReport, Verdict};
pub use mapping::{MappingError, MappingKind, MappingRegistry, MappingTable};
pub use meaning::{
    evaluate_meaning, Conflict, Integration, IntegrationInput, IntegrationStrategy, Origin, Overlay, ResolvedMeaning,
    ResolvedSlot,
};
pub use weights::{derive_weights, DimensionWeights};

/// Two or more senses of one identifier score equally in context.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguityError {
    pub dimension: Dimension,
    pub key: String,
    pub lambda: String,
    pub candidates: Vec<Cybersign>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeaningError {
    #[error("`{}` in {}.{} has {} equally likely senses", .0.lambda, .0.dimension, .0.key, .0.candidates.len())]
    Ambiguity(AmbiguityError),
    #[error("invalid context: {0}")]
    InvalidContext(String),
    #[error("invalid statement: {0}")]
    InvalidStatement(String),
    #[error("inconsistent directives: {0}")]
    InconsistentDirectives(String),
}
