//! The semantic bus: wire framing, the broker that compiles and delivers
//! per-recipient projections, scripted scenarios and the corpus log.

mod agent;
mod broker;
mod corpus;
mod frame;
mod scenario;
mod server;

use thiserror::Error;

use crate::compiler::Violation;
use crate::negotiation::NegotiationError;
use crate::semantics::MeaningError;

pub use agent::{AgentKind, AgentProfile};
pub use broker::{Broker, DeliveryReport, Envelope, ReportStatus, RESOLVER_ID};
pub use corpus::{
    export_corpus, import_corpus, parse_record, write_corpus, CorpusRecord, DeliveryRecord, DeliveryStatus,
    NegotiationRecord, Outcome, CORPUS_SCHEMA,
};
pub use frame::{
    decode_frame, encode_frame, Decoded, Frame, FrameBuffer, FrameError, MsgType, HEADER_LEN, MAGIC, MAX_PAYLOAD,
    VERSION,
};
pub use scenario::{
    run_scenario, EventKind, EventResult, Expectation, ExpectationResult, Metric, ScenarioEvent, ScenarioRun,
    ScenarioScript,
};
pub use server::serve;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BusError {
    #[error("unknown publisher {0}")]
    UnknownPublisher(String),
    #[error("agent id {0} is taken")]
    DuplicateAgent(String),
    #[error("agent {agent} reads dialect {dialect}, which this broker does not serve")]
    DialectMismatch { agent: String, dialect: String },
    #[error("statement does not fit the dialect: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    DialectViolation(Vec<Violation>),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Meaning(MeaningError),
    #[error(transparent)]
    Negotiation(NegotiationError),
    #[error("registry: {0}")]
    Registry(String),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("bad payload: {0}")]
    Payload(String),
    #[error("io: {0}")]
    Io(String),
    #[error("corpus line {line}: {message}")]
    Corpus { line: usize, message: String },
    #[error("scenario{}: {message}", .event.map(|i| format!(" event {i}")).unwrap_or_default())]
    Script { event: Option<usize>, message: String },
}
