//! The five-state negotiation machine.
//!
//! ```text
//! Open --ExplicitationRequest--> Explicating --ExplicitationResponse--> Proposing
//! Open --Proposal--> Proposing(pending)
//! Proposing --Proposal--> Proposing(pending)          (only with nothing pending)
//! Proposing(pending) --Accept(same digest)--> Converged
//! Proposing(pending) --Reject+counter--> Proposing(pending')   while round < max
//! any --Reject without counter--> Failed
//! a proposal at round = max_rounds --> Failed
//! ```
//!
//! Every legal message either ends the session or moves it strictly forward
//! in (phase, round), so every session terminates.

use serde::{Deserialize, Serialize};

use crate::ids::IdGenerator;
use crate::semantics::AmbiguityError;

use super::message::{MessageBody, MessageKind, NegotiationMessage};
use super::NegotiationError;

pub const DEFAULT_MAX_ROUNDS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionState {
    Open,
    Explicating,
    Proposing,
    Converged,
    Failed,
}

impl SessionState {
    pub fn is_terminal(self) -> bool {
        matches!(self, SessionState::Converged | SessionState::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Pending {
    pub digest: String,
    pub proposer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegotiationSession {
    pub session_id: String,
    pub participants: [String; 2],
    pub subject_statement_id: String,
    pub state: SessionState,
    pub round: u32,
    pub max_rounds: u32,
    pub transcript: Vec<NegotiationMessage>,
    /// The proposal awaiting an answer, while `Proposing`.
    pub pending: Option<Pending>,
    /// Who asked for explicitation, while `Explicating`.
    pub requester: Option<String>,
    /// The agreed digest once `Converged`.
    pub agreed: Option<String>,
}

/// Starts a session on a tie. The transcript begins with the initiator's
/// ambiguity report.
pub fn open_session(
    ambiguity: &AmbiguityError,
    statement_id: &str,
    initiator: &str,
    counterparty: &str,
    ids: &mut IdGenerator,
) -> Result<NegotiationSession, NegotiationError> {
    if ambiguity.candidates.len() < 2 {
        return Err(NegotiationError::InvalidAmbiguity(format!(
            "an ambiguity needs at least two candidates, got {}",
            ambiguity.candidates.len()
        )));
    }
    if initiator == counterparty {
        return Err(NegotiationError::InvalidAmbiguity(
            "a session needs two distinct participants".into(),
        ));
    }
    let session_id = ids.next_id();
    let report = NegotiationMessage {
        session_id: session_id.clone(),
        sender: initiator.to_string(),
        round: 0,
        body: MessageBody::AmbiguityReport {
            statement_id: statement_id.to_string(),
            dimension: ambiguity.dimension,
            key: ambiguity.key.clone(),
            candidate_digests: ambiguity.candidates.iter().map(|c| c.digest()).collect(),
        },
    };
    Ok(NegotiationSession {
        session_id,
        participants: [initiator.to_string(), counterparty.to_string()],
        subject_statement_id: statement_id.to_string(),
        state: SessionState::Open,
        round: 0,
        max_rounds: DEFAULT_MAX_ROUNDS,
        transcript: vec![report],
        pending: None,
        requester: None,
        agreed: None,
    })
}

impl NegotiationSession {
    pub fn initiator(&self) -> &str {
        &self.participants[0]
    }

    pub fn counterparty(&self) -> &str {
        &self.participants[1]
    }

    pub fn other(&self, agent: &str) -> &str {
        if agent == self.participants[0] {
            &self.participants[1]
        } else {
            &self.participants[0]
        }
    }

    pub fn last(&self) -> &NegotiationMessage {
        self.transcript.last().expect("transcript starts with a report")
    }

    /// The report that opened the session.
    pub fn report(&self) -> &NegotiationMessage {
        &self.transcript[0]
    }

    fn violation(&self, msg: &NegotiationMessage, reason: &str) -> NegotiationError {
        NegotiationError::ProtocolViolation {
            state: self.state,
            kind: msg.kind(),
            reason: reason.to_string(),
        }
    }

    /// Applies one incoming message. On error the session is unchanged.
    pub fn apply(&mut self, msg: &NegotiationMessage) -> Result<(), NegotiationError> {
        if msg.session_id != self.session_id {
            return Err(NegotiationError::SessionMismatch {
                expected: self.session_id.clone(),
                got: msg.session_id.clone(),
            });
        }
        if !self.participants.contains(&msg.sender) {
            return Err(self.violation(msg, "sender is not a participant"));
        }
        if self.state.is_terminal() {
            return Err(self.violation(msg, "session is closed"));
        }
        let sender = msg.sender.as_str();
        match (&msg.body, self.state) {
            (MessageBody::AmbiguityReport { .. }, _) => return Err(self.violation(msg, "a session has one report")),
            (MessageBody::MetaMarker(_), _) => {
                return Err(self.violation(msg, "meta markers act on meanings, not sessions"))
            }
            (MessageBody::ExplicitationRequest { statement_id, .. }, SessionState::Open) => {
                self.check_statement(msg, statement_id)?;
                self.state = SessionState::Explicating;
                self.requester = Some(sender.to_string());
            }
            (MessageBody::ExplicitationResponse { statement_id, .. }, SessionState::Explicating) => {
                self.check_statement(msg, statement_id)?;
                if self.requester.as_deref() == Some(sender) {
                    return Err(self.violation(msg, "the requester cannot answer its own request"));
                }
                self.state = SessionState::Proposing;
                self.requester = None;
            }
            (MessageBody::Proposal { interpretation_digest }, SessionState::Open | SessionState::Proposing) => {
                if self.pending.is_some() {
                    return Err(self.violation(msg, "a proposal is already pending"));
                }
                self.propose(interpretation_digest, sender);
            }
            (MessageBody::Accept { interpretation_digest }, SessionState::Proposing) => {
                let pending = self.check_answer(msg, interpretation_digest)?;
                self.state = SessionState::Converged;
                self.agreed = Some(pending.digest);
                self.pending = None;
            }
            (
                MessageBody::Reject {
                    interpretation_digest,
                    counter_digest: Some(counter),
                    ..
                },
                SessionState::Proposing,
            ) => {
                self.check_answer(msg, interpretation_digest)?;
                self.pending = None;
                self.propose(counter, sender);
            }
            (
                MessageBody::Reject {
                    interpretation_digest,
                    counter_digest: None,
                    ..
                },
                _,
            ) => {
                if self.pending.is_some() {
                    self.check_answer(msg, interpretation_digest)?;
                }
                self.state = SessionState::Failed;
                self.pending = None;
                self.requester = None;
            }
            _ => return Err(self.violation(msg, "message not legal in this state")),
        }
        self.transcript.push(msg.clone());
        Ok(())
    }

    fn propose(&mut self, digest: &str, proposer: &str) {
        if self.round >= self.max_rounds {
            self.state = SessionState::Failed;
            self.pending = None;
            return;
        }
        self.round += 1;
        self.state = SessionState::Proposing;
        self.pending = Some(Pending {
            digest: digest.to_string(),
            proposer: proposer.to_string(),
        });
    }

    fn check_statement(&self, msg: &NegotiationMessage, statement_id: &str) -> Result<(), NegotiationError> {
        if statement_id != self.subject_statement_id {
            return Err(self.violation(msg, "message is about a different statement"));
        }
        Ok(())
    }

    fn check_answer(&self, msg: &NegotiationMessage, digest: &str) -> Result<Pending, NegotiationError> {
        let Some(pending) = &self.pending else {
            return Err(self.violation(msg, "nothing has been proposed"));
        };
        if pending.proposer == msg.sender {
            return Err(self.violation(msg, "a proposer cannot answer its own proposal"));
        }
        if pending.digest != digest {
            return Err(NegotiationError::DigestMismatch {
                expected: pending.digest.clone(),
                got: digest.to_string(),
            });
        }
        Ok(pending.clone())
    }

    /// Rebuilds a session from its transcript. The first message must be
    /// the ambiguity report.
    pub fn replay(
        transcript: &[NegotiationMessage],
        counterparty: &str,
        max_rounds: u32,
    ) -> Result<NegotiationSession, NegotiationError> {
        let Some((first, rest)) = transcript.split_first() else {
            return Err(NegotiationError::InvalidAmbiguity("empty transcript".into()));
        };
        let MessageBody::AmbiguityReport { statement_id, .. } = &first.body else {
            return Err(NegotiationError::InvalidAmbiguity(
                "transcript must open with a report".into(),
            ));
        };
        let mut session = NegotiationSession {
            session_id: first.session_id.clone(),
            participants: [first.sender.clone(), counterparty.to_string()],
            subject_statement_id: statement_id.clone(),
            state: SessionState::Open,
            round: 0,
            max_rounds,
            transcript: vec![first.clone()],
            pending: None,
            requester: None,
            agreed: None,
        };
        for m in rest {
            session.apply(m)?;
        }
        Ok(session)
    }

    /// Wraps `body` in this session's envelope.
    pub fn message(&self, sender: &str, body: MessageBody) -> NegotiationMessage {
        NegotiationMessage {
            session_id: self.session_id.clone(),
            sender: sender.to_string(),
            round: self.round,
            body,
        }
    }

    /// Kinds of message `agent` could legally send now.
    pub fn legal_kinds(&self, agent: &str) -> Vec<MessageKind> {
        if self.state.is_terminal() {
            return Vec::new();
        }
        let mut kinds = Vec::new();
        match self.state {
            SessionState::Open => {
                kinds.extend([MessageKind::ExplicitationRequest, MessageKind::Proposal]);
            }
            SessionState::Explicating => {
                if self.requester.as_deref() != Some(agent) {
                    kinds.push(MessageKind::ExplicitationResponse);
                }
            }
            SessionState::Proposing => match &self.pending {
                None => kinds.push(MessageKind::Proposal),
                Some(p) if p.proposer != agent => kinds.push(MessageKind::Accept),
                Some(_) => {}
            },
            _ => {}
        }
        let own_pending = matches!(&self.pending, Some(p) if p.proposer == agent);
        if !own_pending {
            kinds.push(MessageKind::Reject);
        }
        kinds
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cybersign::{Cybersign, Dimension, Reference};

    fn r(s: &str) -> Reference {
        s.parse().unwrap()
    }

    fn tie() -> AmbiguityError {
        let sense = |p: &str| {
            Cybersign::from_parts(
                "danger",
                [("a", r(p)), ("b", r("s:x")), ("c", r("t:x")), ("d", r("c:x"))],
            )
            .unwrap()
        };
        AmbiguityError {
            dimension: Dimension::T,
            key: "assessment".into(),
            lambda: "danger".into(),
            candidates: vec![sense("p:one"), sense("p:two")],
        }
    }

    fn open() -> NegotiationSession {
        open_session(&tie(), "stmt-1", "resolver", "drone", &mut IdGenerator::seeded(1)).unwrap()
    }

    fn proposal(s: &NegotiationSession, from: &str, d: &str) -> NegotiationMessage {
        s.message(
            from,
            MessageBody::Proposal {
                interpretation_digest: d.into(),
            },
        )
    }

    #[test]
    fn open_needs_two_candidates() {
        let mut one = tie();
        one.candidates.pop();
        assert!(matches!(
            open_session(&one, "s", "a", "b", &mut IdGenerator::seeded(1)),
            Err(NegotiationError::InvalidAmbiguity(_))
        ));
        let s = open();
        assert_eq!(s.state, SessionState::Open);
        assert_eq!(s.round, 0);
        let MessageBody::AmbiguityReport { candidate_digests, .. } = &s.transcript[0].body else {
            panic!()
        };
        assert_eq!(candidate_digests.len(), 2);
    }

    #[test]
    fn wrong_digest_leaves_state_alone() {
        let mut s = open();
        s.apply(&proposal(&s, "resolver", "d1")).unwrap();
        let before = s.clone();
        let bad = s.message(
            "drone",
            MessageBody::Accept {
                interpretation_digest: "zz".into(),
            },
        );
        assert!(matches!(s.apply(&bad), Err(NegotiationError::DigestMismatch { .. })));
        assert_eq!(s, before);
        let good = s.message(
            "drone",
            MessageBody::Accept {
                interpretation_digest: "d1".into(),
            },
        );
        s.apply(&good).unwrap();
        assert_eq!(s.state, SessionState::Converged);
        assert_eq!(s.agreed.as_deref(), Some("d1"));
    }

    #[test]
    fn reject_without_counter_fails_from_open() {
        let mut s = open();
        let msg = s.message(
            "drone",
            MessageBody::Reject {
                interpretation_digest: String::new(),
                reason: "no".into(),
                counter_digest: None,
            },
        );
        s.apply(&msg).unwrap();
        assert_eq!(s.state, SessionState::Failed);
    }

    #[test]
    fn counter_proposals_run_out_at_max_rounds() {
        let mut s = open();
        s.apply(&proposal(&s, "resolver", "d0")).unwrap();
        let mut who = "drone".to_string();
        let mut last = "d0".to_string();
        while !s.state.is_terminal() {
            let next = format!("d{}", s.round);
            let m = s.message(
                &who,
                MessageBody::Reject {
                    interpretation_digest: last.clone(),
                    reason: "prefer mine".into(),
                    counter_digest: Some(next.clone()),
                },
            );
            s.apply(&m).unwrap();
            last = next;
            who = s.other(&who).to_string();
            assert!(s.round <= s.max_rounds);
        }
        assert_eq!(s.state, SessionState::Failed);
        assert_eq!(s.round, DEFAULT_MAX_ROUNDS);
    }

    #[test]
    fn illegal_kinds_are_violations() {
        let mut s = open();
        let marker = s.message(
            "drone",
            MessageBody::MetaMarker(crate::negotiation::MetaMarker {
                target_statement_id: "stmt-1".into(),
                dimension: Dimension::T,
                overrides: Default::default(),
            }),
        );
        assert!(matches!(
            s.apply(&marker),
            Err(NegotiationError::ProtocolViolation { .. })
        ));
        let accept = s.message(
            "drone",
            MessageBody::Accept {
                interpretation_digest: "x".into(),
            },
        );
        assert!(matches!(
            s.apply(&accept),
            Err(NegotiationError::ProtocolViolation { .. })
        ));
        let stranger = NegotiationMessage {
            sender: "eve".into(),
            ..proposal(&s, "resolver", "x")
        };
        assert!(s.apply(&stranger).is_err());
    }

    #[test]
    fn replay_reproduces_state() {
        let mut s = open();
        let req = s.message(
            "resolver",
            MessageBody::ExplicitationRequest {
                statement_id: "stmt-1".into(),
                dimension: Dimension::T,
                key: "assessment".into(),
            },
        );
        s.apply(&req).unwrap();
        let resp = s.message(
            "drone",
            MessageBody::ExplicitationResponse {
                statement_id: "stmt-1".into(),
                dimension: Dimension::T,
                key: "assessment".into(),
                value: crate::SemanticValue::Reference(r("p:one")),
            },
        );
        s.apply(&resp).unwrap();
        s.apply(&proposal(&s, "resolver", "d1")).unwrap();
        let again = NegotiationSession::replay(&s.transcript, "drone", s.max_rounds).unwrap();
        assert_eq!(again, s);
    }
}
