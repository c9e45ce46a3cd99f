use std::collections::BTreeMap;

use crate::cybersign::{Cybersign, Dimension, SemanticValue, SignRegistry};
use crate::fdsg::Cyberstatement;
use crate::semantics::{
    derive_weights, disambiguate_with_prior, evaluate_meaning, ContextSnapshot, Disambiguation, Integration,
    IntegrationInput, IntegrationStrategy, MappingRegistry, MeaningError, Overlay, ResolvedMeaning,
};

use super::message::{MessageBody, NegotiationMessage};
use super::session::NegotiationSession;
use super::NegotiationError;

/// Forces the sense of some identifiers; everything else is left to the
/// inner strategy.
pub struct PinnedSenses<'a> {
    /// lambda -> sign digest
    pub pins: BTreeMap<String, String>,
    pub inner: &'a dyn IntegrationStrategy,
}

impl IntegrationStrategy for PinnedSenses<'_> {
    fn integrate(&self, input: &IntegrationInput<'_>) -> Integration {
        self.inner.integrate(input)
    }

    fn sign_prior(&self, lambda: &str, candidate: &Cybersign, ctx: &ContextSnapshot) -> f64 {
        match self.pins.get(lambda) {
            Some(d) if *d == candidate.digest() => 1.0,
            Some(_) => 0.0,
            None => self.inner.sign_prior(lambda, candidate, ctx),
        }
    }
}

/// One agent's view of the statement under negotiation.
#[derive(Debug, Clone)]
pub struct Interpreter {
    pub stmt: Cyberstatement,
    pub signs: SignRegistry,
    pub registry: MappingRegistry,
    /// What this agent knows of the situation.
    pub private: ContextSnapshot,
}

impl Interpreter {
    /// The meaning both parties compute for one sense: the statement alone,
    /// with `lambda` pinned to `sense`.
    pub fn interpretation(&self, lambda: &str, sense: &Cybersign) -> Result<ResolvedMeaning, MeaningError> {
        let strategy = PinnedSenses {
            pins: [(lambda.to_string(), sense.digest())].into_iter().collect(),
            inner: &Overlay,
        };
        evaluate_meaning(
            &self.stmt,
            &ContextSnapshot::empty(0),
            &self.signs,
            &self.registry,
            &strategy,
        )
    }

    pub fn interpretation_digest(&self, lambda: &str, sense: &Cybersign) -> Result<String, MeaningError> {
        Ok(self.interpretation(lambda, sense)?.digest())
    }

    /// The ambiguous slot named by the session's report.
    fn subject(&self, session: &NegotiationSession) -> Option<(Dimension, String, String)> {
        let MessageBody::AmbiguityReport { dimension, key, .. } = &session.report().body else {
            return None;
        };
        match self.stmt.slot(*dimension, key) {
            Some(SemanticValue::Identifier(lambda)) => Some((*dimension, key.clone(), lambda.clone())),
            _ => None,
        }
    }

    fn candidates(&self, session: &NegotiationSession) -> Vec<Cybersign> {
        let MessageBody::AmbiguityReport { candidate_digests, .. } = &session.report().body else {
            return Vec::new();
        };
        let Some((_, _, lambda)) = self.subject(session) else {
            return Vec::new();
        };
        self.signs
            .lookup(&lambda)
            .iter()
            .filter(|c| candidate_digests.contains(&c.digest()))
            .cloned()
            .collect()
    }

    /// The sense this agent would choose: private context first, then any
    /// values explicated in the transcript as a tie-break.
    pub fn preferred(&self, session: &NegotiationSession) -> Option<Cybersign> {
        let (dim, _, lambda) = self.subject(session)?;
        let candidates = self.candidates(session);
        if candidates.is_empty() {
            return None;
        }
        let weights = derive_weights(&self.stmt.omega, &self.stmt.present()).ok()?;
        let explicated: Vec<&SemanticValue> = session
            .transcript
            .iter()
            .filter_map(|m| match &m.body {
                MessageBody::ExplicitationResponse { dimension, value, .. } if *dimension == dim => Some(value),
                _ => None,
            })
            .collect();
        let prior = |c: &Cybersign| {
            let signified = SemanticValue::Reference(c.dyad(dim).signified.clone());
            if explicated.contains(&&signified) {
                1.0
            } else {
                0.0
            }
        };
        match disambiguate_with_prior(&lambda, &candidates, &self.private, &weights, prior) {
            Disambiguation::Chosen(c) => Some(c),
            Disambiguation::Tie(_) => None,
        }
    }

    /// The value this agent states when asked to make the slot explicit:
    /// its preferred sense's signified in the slot's dimension.
    pub fn explicate(&self, session: &NegotiationSession) -> Option<SemanticValue> {
        let (dim, _, _) = self.subject(session)?;
        let sense = self.preferred(session)?;
        Some(SemanticValue::Reference(sense.dyad(dim).signified.clone()))
    }

    /// Interpretation digests of every candidate, keyed by that digest.
    pub fn candidate_interpretations(&self, session: &NegotiationSession) -> BTreeMap<String, Cybersign> {
        let Some((_, _, lambda)) = self.subject(session) else {
            return BTreeMap::new();
        };
        self.candidates(session)
            .into_iter()
            .filter_map(|c| Some((self.interpretation_digest(&lambda, &c).ok()?, c)))
            .collect()
    }
}

/// Decides an agent's next move in a session.
pub trait Policy {
    fn id(&self) -> &str;

    /// The body this agent sends now, or `None` to stay silent.
    fn reply(&mut self, session: &NegotiationSession) -> Option<MessageBody>;
}

/// Explicates when asked, proposes what it believes, accepts agreement and
/// counters disagreement.
pub struct HonestResponder {
    pub id: String,
    pub interpreter: Interpreter,
}

impl HonestResponder {
    pub fn new(id: impl Into<String>, interpreter: Interpreter) -> HonestResponder {
        HonestResponder {
            id: id.into(),
            interpreter,
        }
    }

    fn reject(digest: &str, reason: impl Into<String>) -> MessageBody {
        MessageBody::Reject {
            interpretation_digest: digest.to_string(),
            reason: reason.into(),
            counter_digest: None,
        }
    }

    fn own_digest(&self, session: &NegotiationSession) -> Option<String> {
        let sense = self.interpreter.preferred(session)?;
        let (_, _, lambda) = self.interpreter.subject(session)?;
        self.interpreter.interpretation_digest(&lambda, &sense).ok()
    }

    fn answer(&self, session: &NegotiationSession, offered: &str) -> MessageBody {
        match self.own_digest(session) {
            Some(own) if own == offered => MessageBody::Accept {
                interpretation_digest: offered.to_string(),
            },
            Some(own) => MessageBody::Reject {
                interpretation_digest: offered.to_string(),
                reason: "a different sense fits my context".into(),
                counter_digest: Some(own),
            },
            // no preference of its own: any genuine candidate will do
            None if self
                .interpreter
                .candidate_interpretations(session)
                .contains_key(offered) =>
            {
                MessageBody::Accept {
                    interpretation_digest: offered.to_string(),
                }
            }
            None => Self::reject(offered, "not an interpretation of the statement"),
        }
    }
}

impl Policy for HonestResponder {
    fn id(&self) -> &str {
        &self.id
    }

    fn reply(&mut self, session: &NegotiationSession) -> Option<MessageBody> {
        if session.state.is_terminal() {
            return None;
        }
        let last = session.last();
        let mine = last.sender == self.id;
        match &last.body {
            MessageBody::AmbiguityReport {
                statement_id,
                dimension,
                key,
                ..
            } if mine => Some(match self.own_digest(session) {
                Some(d) => MessageBody::Proposal {
                    interpretation_digest: d,
                },
                None => MessageBody::ExplicitationRequest {
                    statement_id: statement_id.clone(),
                    dimension: *dimension,
                    key: key.clone(),
                },
            }),
            _ if mine => None,
            MessageBody::ExplicitationRequest {
                statement_id,
                dimension,
                key,
            } => Some(match self.interpreter.explicate(session) {
                Some(value) => MessageBody::ExplicitationResponse {
                    statement_id: statement_id.clone(),
                    dimension: *dimension,
                    key: key.clone(),
                    value,
                },
                None => Self::reject("", "my context does not settle it either"),
            }),
            MessageBody::ExplicitationResponse { .. } => Some(match self.own_digest(session) {
                Some(d) => MessageBody::Proposal {
                    interpretation_digest: d,
                },
                None => Self::reject("", "the explicated value matches no candidate"),
            }),
            MessageBody::Proposal { interpretation_digest } => Some(self.answer(session, interpretation_digest)),
            MessageBody::Reject {
                counter_digest: Some(counter),
                ..
            } => Some(self.answer(session, counter)),
            _ => None,
        }
    }
}

/// Refuses everything without offering an alternative.
pub struct AlwaysReject {
    pub id: String,
}

impl Policy for AlwaysReject {
    fn id(&self) -> &str {
        &self.id
    }

    fn reply(&mut self, session: &NegotiationSession) -> Option<MessageBody> {
        let last = session.last();
        let opening = matches!(last.body, MessageBody::AmbiguityReport { .. });
        if session.state.is_terminal() || (last.sender == self.id && !opening) {
            return None;
        }
        Some(MessageBody::Reject {
            interpretation_digest: session.pending.as_ref().map(|p| p.digest.clone()).unwrap_or_default(),
            reason: "rejected by policy".into(),
            counter_digest: None,
        })
    }
}

/// Applies `incoming`, then lets the local `policy` answer.
pub fn step(
    session: &mut NegotiationSession,
    incoming: &NegotiationMessage,
    policy: &mut dyn Policy,
) -> Result<Option<NegotiationMessage>, NegotiationError> {
    session.apply(incoming)?;
    if session.state.is_terminal() {
        return Ok(None);
    }
    Ok(policy.reply(session).map(|body| session.message(policy.id(), body)))
}

/// Runs a session to completion between two local policies. The initiator
/// moves first. Stops early if the party to move stays silent.
pub fn negotiate(
    mut session: NegotiationSession,
    initiator: &mut dyn Policy,
    counterparty: &mut dyn Policy,
) -> Result<NegotiationSession, NegotiationError> {
    let Some(body) = initiator.reply(&session) else {
        return Ok(session);
    };
    let mut msg = session.message(initiator.id(), body);
    loop {
        let receiver: &mut dyn Policy = if msg.sender == initiator.id() {
            &mut *counterparty
        } else {
            &mut *initiator
        };
        match step(&mut session, &msg, receiver)? {
            Some(next) => msg = next,
            None => return Ok(session),
        }
    }
}

/// Orders messages that arrived in the same instant: by sender id, then by
/// arrival. Of two simultaneous proposals the one from the smaller id is
/// applied first; the other becomes a protocol violation.
pub fn linearize(mut simultaneous: Vec<NegotiationMessage>) -> Vec<NegotiationMessage> {
    simultaneous.sort_by(|a, b| a.sender.cmp(&b.sender));
    simultaneous
}
