use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cybersign::{Dimension, SemanticValue};

/// "Interpret the `dimension` component of that statement as ...".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaMarker {
    pub target_statement_id: String,
    pub dimension: Dimension,
    pub overrides: BTreeMap<String, SemanticValue>,
}

/// Payload of one protocol message. Wire codes follow declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MessageBody {
    AmbiguityReport {
        statement_id: String,
        dimension: Dimension,
        key: String,
        candidate_digests: Vec<String>,
    },
    ExplicitationRequest {
        statement_id: String,
        dimension: Dimension,
        key: String,
    },
    ExplicitationResponse {
        statement_id: String,
        dimension: Dimension,
        key: String,
        value: SemanticValue,
    },
    MetaMarker(MetaMarker),
    Proposal {
        interpretation_digest: String,
    },
    Accept {
        interpretation_digest: String,
    },
    Reject {
        interpretation_digest: String,
        reason: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        counter_digest: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MessageKind {
    AmbiguityReport,
    ExplicitationRequest,
    ExplicitationResponse,
    MetaMarker,
    Proposal,
    Accept,
    Reject,
}

impl MessageKind {
    pub const ALL: [MessageKind; 7] = [
        MessageKind::AmbiguityReport,
        MessageKind::ExplicitationRequest,
        MessageKind::ExplicitationResponse,
        MessageKind::MetaMarker,
        MessageKind::Proposal,
        MessageKind::Accept,
        MessageKind::Reject,
    ];

    /// Bus message-type byte.
    pub fn code(self) -> u8 {
        0x10 + self as u8
    }

    pub fn from_code(code: u8) -> Option<MessageKind> {
        MessageKind::ALL.get(code.checked_sub(0x10)? as usize).copied()
    }
}

impl MessageBody {
    pub fn kind(&self) -> MessageKind {
        match self {
            MessageBody::AmbiguityReport { .. } => MessageKind::AmbiguityReport,
            MessageBody::ExplicitationRequest { .. } => MessageKind::ExplicitationRequest,
            MessageBody::ExplicitationResponse { .. } => MessageKind::ExplicitationResponse,
            MessageBody::MetaMarker(_) => MessageKind::MetaMarker,
            MessageBody::Proposal { .. } => MessageKind::Proposal,
            MessageBody::Accept { .. } => MessageKind::Accept,
            MessageBody::Reject { .. } => MessageKind::Reject,
        }
    }
}

/// A message in the context of one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NegotiationMessage {
    pub session_id: String,
    pub sender: String,
    pub round: u32,
    pub body: MessageBody,
}

impl NegotiationMessage {
    pub fn kind(&self) -> MessageKind {
        self.body.kind()
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec(&serde_json::to_value(self).expect("serializable")).expect("serializable")
    }

    pub fn from_json(bytes: &[u8]) -> Result<NegotiationMessage, serde_json::Error> {
        serde_json::from_slice(bytes)
    }
}
