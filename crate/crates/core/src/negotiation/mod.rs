//! Error handling between agents: dimensional explicitation, meta markers,
//! bounded meaning negotiation and a ledger of past resolutions.

mod ledger;
mod marker;
mod message;
mod policy;
mod session;

use thiserror::Error;

pub use ledger::{context_signature, InterpretationLedger, LearnedPriors, LedgerRecord, SharedLedger, BOOST_SCALE};
pub use marker::apply_meta_marker;
pub use message::{MessageBody, MessageKind, MetaMarker, NegotiationMessage};
pub use policy::{linearize, negotiate, step, AlwaysReject, HonestResponder, Interpreter, PinnedSenses, Policy};
pub use session::{open_session, NegotiationSession, Pending, SessionState, DEFAULT_MAX_ROUNDS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NegotiationError {
    #[error("{kind:?} not allowed in state {state:?}: {reason}")]
    ProtocolViolation {
        state: SessionState,
        kind: MessageKind,
        reason: String,
    },
    #[error("digest mismatch: expected {expected}, got {got}")]
    DigestMismatch { expected: String, got: String },
    #[error("message for session {got}, expected {expected}")]
    SessionMismatch { expected: String, got: String },
    #[error("unknown statement {0}")]
    UnknownStatement(String),
    #[error("invalid ambiguity: {0}")]
    InvalidAmbiguity(String),
    #[error("ledger: {0}")]
    Ledger(String),
}
