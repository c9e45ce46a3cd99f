//! The annotated interaction log: one record per published statement.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::compiler::TargetProfile;
use crate::cybersign::Dimension;
use crate::negotiation::{NegotiationMessage, NegotiationSession, SessionState};

use super::BusError;

pub const CORPUS_SCHEMA: &str = include_str!("../../data/cybercorpus.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case", deny_unknown_fields)]
pub enum Outcome {
    Resolved {
        meaning_digest: String,
    },
    Ambiguous {
        dimension: Dimension,
        key: String,
        lambda: String,
        candidate_digests: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NegotiationRecord {
    pub session_id: String,
    pub state: SessionState,
    pub rounds: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agreed: Option<String>,
    pub transcript: Vec<NegotiationMessage>,
}

impl NegotiationRecord {
    pub fn of(session: &NegotiationSession) -> NegotiationRecord {
        NegotiationRecord {
            session_id: session.session_id.clone(),
            state: session.state,
            rounds: session.round,
            agreed: session.agreed.clone(),
            transcript: session.transcript.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeliveryStatus {
    Delivered,
    /// The recipient's target has nothing to render for this statement.
    Skipped,
    /// Held back while the statement's meaning is negotiated.
    Withheld,
    /// Dropped because negotiation failed.
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeliveryRecord {
    pub target: TargetProfile,
    pub status: DeliveryStatus,
    /// SHA-256 of the delivered payload text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusRecord {
    pub tick: u64,
    pub publisher: String,
    pub statement_id: String,
    /// Canonical print.
    pub statement: String,
    /// All four dimensions, each key mapped to a canonical value print.
    pub components: BTreeMap<Dimension, BTreeMap<String, String>>,
    /// The broker context at publication, in context-file form.
    pub context: Value,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negotiation: Option<NegotiationRecord>,
    pub deliveries: BTreeMap<String, DeliveryRecord>,
}

impl CorpusRecord {
    /// One key-sorted JSON line without the newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(&serde_json::to_value(self).expect("serializable")).expect("serializable")
    }
}

/// JSONL with LF endings.
pub fn export_corpus(records: &[CorpusRecord]) -> String {
    records.iter().map(|r| r.to_line() + "\n").collect()
}

pub fn write_corpus(records: &[CorpusRecord], path: impl AsRef<Path>) -> Result<(), BusError> {
    let path = path.as_ref();
    std::fs::write(path, export_corpus(records)).map_err(|e| BusError::Io(format!("{}: {e}", path.display())))
}

fn schema_validator() -> &'static jsonschema::Validator {
    static VALIDATOR: OnceLock<jsonschema::Validator> = OnceLock::new();
    VALIDATOR.get_or_init(|| {
        let schema: Value = serde_json::from_str(CORPUS_SCHEMA).expect("bundled schema is JSON");
        jsonschema::validator_for(&schema).expect("bundled schema compiles")
    })
}

/// Parses one line: strict JSON, the published schema, then the record
/// type itself.
pub fn parse_record(line: &str) -> Result<CorpusRecord, String> {
    let value = crate::json::parse_strict(line).map_err(|e| e.to_string())?;
    let errors: Vec<String> = schema_validator()
        .iter_errors(&value)
        .map(|e| format!("{}: {e}", e.instance_path()))
        .collect();
    if !errors.is_empty() {
        return Err(errors.join("; "));
    }
    serde_json::from_value(value).map_err(|e| e.to_string())
}

/// Every line of a corpus export, validated. Errors carry 1-based line
/// numbers.
pub fn import_corpus(text: &str) -> Result<Vec<CorpusRecord>, BusError> {
    if !text.is_empty() && !text.ends_with('\n') {
        return Err(BusError::Corpus {
            line: text.lines().count(),
            message: "missing final newline".into(),
        });
    }
    text.split_terminator('\n')
        .enumerate()
        .map(|(i, line)| {
            if line.ends_with('\r') {
                return Err(BusError::Corpus {
                    line: i + 1,
                    message: "CRLF line ending".into(),
                });
            }
            parse_record(line).map_err(|message| BusError::Corpus { line: i + 1, message })
        })
        .collect()
}
