use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::Serialize;
use serde_json::json;

use crate::compiler::{compile, validate_against_dialect, Dialect};
use crate::cybersign::{Cybersign, Dimension, SignRegistry};
use crate::digest::sha256_hex;
use crate::fdsg::{parse_with, print_canonical, Cyberstatement};
use crate::ids::IdGenerator;
use crate::negotiation::{
    open_session, HonestResponder, InterpretationLedger, Interpreter, LearnedPriors, MessageBody, NegotiationMessage,
    NegotiationSession, Policy, SessionState,
};
use crate::semantics::{evaluate_meaning, ContextSnapshot, MappingRegistry, MeaningError};

use super::agent::AgentProfile;
use super::corpus::{CorpusRecord, DeliveryRecord, DeliveryStatus, NegotiationRecord, Outcome};
use super::frame::{Frame, MsgType};
use super::BusError;

/// The broker-side party to every negotiation.
pub const RESOLVER_ID: &str = "resolver";

/// A frame on its way to one agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub to: String,
    pub frame: Frame,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ReportStatus {
    Delivered,
    Negotiating { session_id: String },
    Failed { session_id: String },
}

/// What became of one statement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeliveryReport {
    pub statement_id: String,
    pub status: ReportStatus,
    pub deliveries: BTreeMap<String, DeliveryRecord>,
}

impl DeliveryReport {
    pub fn count(&self, status: DeliveryStatus) -> usize {
        self.deliveries.values().filter(|d| d.status == status).count()
    }

    pub fn delivered(&self) -> usize {
        self.count(DeliveryStatus::Delivered)
    }

    /// Every recipient got a payload.
    pub fn all_delivered(&self) -> bool {
        self.status == ReportStatus::Delivered && self.delivered() == self.deliveries.len()
    }
}

#[derive(Debug, Clone)]
struct Pending {
    record: usize,
    stmt: Cyberstatement,
    session: NegotiationSession,
}

/// The semantic bus. Processes one event at a time; everything it sends
/// goes to the outbox.
#[derive(Debug)]
pub struct Broker {
    dialect: Dialect,
    signs: SignRegistry,
    mappings: MappingRegistry,
    context: ContextSnapshot,
    agents: IndexMap<String, AgentProfile>,
    ids: IdGenerator,
    ledger: InterpretationLedger,
    corpus: Vec<CorpusRecord>,
    pending: Vec<Pending>,
    outbox: Vec<Envelope>,
    tick: u64,
    /// Answer for publishers in negotiation, from the broker's context.
    pub proxy_publishers: bool,
}

impl Broker {
    pub fn new(dialect: Dialect, signs: SignRegistry, mappings: MappingRegistry, ids: IdGenerator) -> Broker {
        Broker {
            dialect,
            signs,
            mappings,
            context: ContextSnapshot::empty(0),
            agents: IndexMap::new(),
            ids,
            ledger: InterpretationLedger::new(),
            corpus: Vec::new(),
            pending: Vec::new(),
            outbox: Vec::new(),
            tick: 0,
            proxy_publishers: true,
        }
    }

    pub fn register(&mut self, profile: AgentProfile) -> Result<(), BusError> {
        if profile.agent_id.is_empty() || profile.agent_id == RESOLVER_ID || self.agents.contains_key(&profile.agent_id)
        {
            return Err(BusError::DuplicateAgent(profile.agent_id));
        }
        if profile.dialect != self.dialect.name {
            return Err(BusError::DialectMismatch {
                agent: profile.agent_id,
                dialect: profile.dialect,
            });
        }
        self.agents.insert(profile.agent_id.clone(), profile);
        Ok(())
    }

    pub fn agents(&self) -> impl Iterator<Item = &AgentProfile> {
        self.agents.values()
    }

    pub fn set_tick(&mut self, tick: u64) {
        self.tick = tick;
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn context(&self) -> &ContextSnapshot {
        &self.context
    }

    pub fn signs(&self) -> &SignRegistry {
        &self.signs
    }

    pub fn ledger(&self) -> &InterpretationLedger {
        &self.ledger
    }

    pub fn corpus(&self) -> &[CorpusRecord] {
        &self.corpus
    }

    pub fn into_corpus(self) -> Vec<CorpusRecord> {
        self.corpus
    }

    /// Sessions still waiting for a move.
    pub fn pending_sessions(&self) -> impl Iterator<Item = &NegotiationSession> {
        self.pending.iter().map(|p| &p.session)
    }

    pub fn drain_outbox(&mut self) -> Vec<Envelope> {
        std::mem::take(&mut self.outbox)
    }

    /// Adds another sense for an identifier.
    pub fn inject_sense(&mut self, sign: Cybersign) -> Result<(), BusError> {
        self.signs.register(sign).map_err(|e| BusError::Registry(e.to_string()))
    }

    /// Parses `source` with the broker's id generator and publishes it.
    pub fn publish_source(&mut self, publisher: &str, source: &str) -> Result<DeliveryReport, BusError> {
        let stmt = parse_with(source, &mut self.ids)
            .map_err(|diags| BusError::Parse(diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")))?;
        self.publish(publisher, stmt)
    }

    /// Evaluates `stmt` in the broker context, then either delivers one
    /// projection per recipient or opens a negotiation and holds delivery.
    pub fn publish(&mut self, publisher: &str, stmt: Cyberstatement) -> Result<DeliveryReport, BusError> {
        if !self.agents.contains_key(publisher) {
            return Err(BusError::UnknownPublisher(publisher.to_string()));
        }
        validate_against_dialect(&stmt, &self.dialect).map_err(BusError::DialectViolation)?;
        let strategy = LearnedPriors { ledger: &self.ledger };
        let evaluated = evaluate_meaning(&stmt, &self.context, &self.signs, &self.mappings, &strategy);
        let mut record = CorpusRecord {
            tick: self.tick,
            publisher: publisher.to_string(),
            statement_id: stmt.statement_id.clone(),
            statement: print_canonical(&stmt),
            components: components(&stmt),
            context: serde_json::from_str(&self.context.to_json()).expect("context json"),
            outcome: Outcome::Resolved {
                meaning_digest: String::new(),
            },
            negotiation: None,
            deliveries: BTreeMap::new(),
        };
        match evaluated {
            Ok(meaning) => {
                record.outcome = Outcome::Resolved {
                    meaning_digest: meaning.digest(),
                };
                record.deliveries = self.deliver(publisher, &stmt);
                let report = DeliveryReport {
                    statement_id: stmt.statement_id.clone(),
                    status: ReportStatus::Delivered,
                    deliveries: record.deliveries.clone(),
                };
                self.corpus.push(record);
                Ok(report)
            }
            Err(MeaningError::Ambiguity(amb)) => {
                record.outcome = Outcome::Ambiguous {
                    dimension: amb.dimension,
                    key: amb.key.clone(),
                    lambda: amb.lambda.clone(),
                    candidate_digests: amb.candidates.iter().map(|c| c.digest()).collect(),
                };
                record.deliveries = self.withheld(publisher);
                let session = open_session(&amb, &stmt.statement_id, RESOLVER_ID, publisher, &mut self.ids)
                    .map_err(BusError::Negotiation)?;
                self.send_negotiation(publisher, session.last());
                record.negotiation = Some(NegotiationRecord::of(&session));
                self.corpus.push(record);
                self.pending.push(Pending {
                    record: self.corpus.len() - 1,
                    stmt,
                    session,
                });
                let i = self.pending.len() - 1;
                let report = self.advance(i)?;
                Ok(report)
            }
            Err(e) => Err(BusError::Meaning(e)),
        }
    }

    /// Replaces the broker context and lets waiting negotiations move.
    /// Returns a report for every session that moved.
    pub fn update_context(&mut self, ctx: ContextSnapshot) -> Result<Vec<DeliveryReport>, BusError> {
        ctx.validate().map_err(BusError::Meaning)?;
        self.context = ctx;
        let mut reports = Vec::new();
        let mut i = 0;
        while i < self.pending.len() {
            let before = self.pending[i].session.transcript.len();
            let report = self.advance(i)?;
            if !matches!(report.status, ReportStatus::Negotiating { .. }) {
                // settled and removed; the next session moved into slot i
                reports.push(report);
                continue;
            }
            if self.pending[i].session.transcript.len() > before {
                reports.push(report);
            }
            i += 1;
        }
        Ok(reports)
    }

    /// Applies a negotiation message from a remote publisher, then lets the
    /// resolver answer.
    pub fn handle_negotiation(&mut self, msg: NegotiationMessage) -> Result<DeliveryReport, BusError> {
        let i = self
            .pending
            .iter()
            .position(|p| p.session.session_id == msg.session_id)
            .ok_or_else(|| BusError::Payload(format!("no open session {}", msg.session_id)))?;
        if msg.sender != self.pending[i].session.counterparty() {
            return Err(BusError::Payload(format!(
                "{} is not the publisher in {}",
                msg.sender, msg.session_id
            )));
        }
        self.pending[i].session.apply(&msg).map_err(BusError::Negotiation)?;
        self.advance(i)
    }

    /// Dispatches one frame received from `sender`.
    pub fn handle_frame(&mut self, sender: &str, frame: &Frame) -> Result<Vec<DeliveryReport>, BusError> {
        match frame.msg_type {
            MsgType::Statement => {
                let body: serde_json::Value =
                    serde_json::from_str(&frame.payload).map_err(|e| BusError::Payload(e.to_string()))?;
                let source = body["statement"]
                    .as_str()
                    .ok_or_else(|| BusError::Payload("statement frame needs a `statement` string".into()))?;
                Ok(vec![self.publish_source(sender, source)?])
            }
            MsgType::Context => {
                let ctx = ContextSnapshot::from_json(&frame.payload).map_err(BusError::Meaning)?;
                self.update_context(ctx)
            }
            MsgType::Negotiation(_) => {
                let msg = NegotiationMessage::from_json(frame.payload.as_bytes())
                    .map_err(|e| BusError::Payload(e.to_string()))?;
                if msg.sender != sender || msg.kind().code() != frame.msg_type.code() {
                    return Err(BusError::Payload(
                        "negotiation frame does not match its sender or type".into(),
                    ));
                }
                Ok(vec![self.handle_negotiation(msg)?])
            }
            MsgType::Register => {
                let profile: AgentProfile =
                    serde_json::from_str(&frame.payload).map_err(|e| BusError::Payload(e.to_string()))?;
                self.register(profile)?;
                Ok(Vec::new())
            }
            MsgType::Delivery | MsgType::Error => Err(BusError::Payload(format!(
                "the broker does not accept {} frames",
                frame.msg_type
            ))),
        }
    }

    fn interpreter(&self, stmt: &Cyberstatement) -> Interpreter {
        Interpreter {
            stmt: stmt.clone(),
            signs: self.signs.clone(),
            registry: self.mappings.clone(),
            private: self.context.clone(),
        }
    }

    fn send_negotiation(&mut self, to: &str, msg: &NegotiationMessage) {
        let payload = String::from_utf8(msg.to_json()).expect("json is utf-8");
        self.outbox.push(Envelope {
            to: to.to_string(),
            frame: Frame::new(MsgType::Negotiation(msg.kind()), payload),
        });
    }

    /// Moves pending session `i` as far as the broker can, then settles it
    /// if it ended.
    fn advance(&mut self, i: usize) -> Result<DeliveryReport, BusError> {
        let interpreter = self.interpreter(&self.pending[i].stmt);
        let publisher = self.pending[i].session.counterparty().to_string();
        let mut resolver = HonestResponder::new(RESOLVER_ID, interpreter.clone());
        let mut proxy = HonestResponder::new(publisher.clone(), interpreter);
        loop {
            let session = &self.pending[i].session;
            if session.state.is_terminal() {
                break;
            }
            let last = session.last();
            let resolver_moves = match last.body {
                MessageBody::AmbiguityReport { .. } => true,
                _ => last.sender != RESOLVER_ID,
            };
            let body = if resolver_moves {
                resolver.reply(session)
            } else if !self.proxy_publishers {
                None
            } else if matches!(last.body, MessageBody::ExplicitationRequest { .. }) {
                // the publisher answers only once the context settles it
                proxy.interpreter.explicate(session).and_then(|_| proxy.reply(session))
            } else {
                proxy.reply(session)
            };
            let Some(body) = body else { break };
            let sender = if resolver_moves {
                RESOLVER_ID
            } else {
                publisher.as_str()
            };
            let msg = session.message(sender, body);
            self.pending[i].session.apply(&msg).map_err(BusError::Negotiation)?;
            if resolver_moves {
                self.send_negotiation(&publisher, &msg);
            }
        }
        self.settle(i)
    }

    /// Copies session `i` into its corpus record; delivers or drops once
    /// the session has ended.
    fn settle(&mut self, i: usize) -> Result<DeliveryReport, BusError> {
        let Pending { record, stmt, session } = self.pending[i].clone();
        self.corpus[record].negotiation = Some(NegotiationRecord::of(&session));
        let status = match session.state {
            SessionState::Converged => {
                let agreed = session.agreed.clone().expect("converged sessions agree");
                let interpreter = self.interpreter(&stmt);
                if let Some(chosen) = interpreter.candidate_interpretations(&session).get(&agreed) {
                    let lambda = chosen.lambda().to_string();
                    let ctx = self.context.clone();
                    self.ledger.record_outcome(&ctx, &lambda, chosen);
                }
                self.corpus[record].deliveries = self.deliver(&session.participants[1], &stmt);
                ReportStatus::Delivered
            }
            SessionState::Failed => {
                for d in self.corpus[record].deliveries.values_mut() {
                    d.status = DeliveryStatus::Dropped;
                    d.reason = Some("negotiation failed".into());
                }
                ReportStatus::Failed {
                    session_id: session.session_id.clone(),
                }
            }
            _ => ReportStatus::Negotiating {
                session_id: session.session_id.clone(),
            },
        };
        if session.state.is_terminal() {
            self.pending.remove(i);
        }
        Ok(DeliveryReport {
            statement_id: stmt.statement_id.clone(),
            status,
            deliveries: self.corpus[record].deliveries.clone(),
        })
    }

    fn recipients(&self, publisher: &str) -> Vec<AgentProfile> {
        self.agents
            .values()
            .filter(|a| a.agent_id != publisher)
            .cloned()
            .collect()
    }

    fn withheld(&self, publisher: &str) -> BTreeMap<String, DeliveryRecord> {
        self.recipients(publisher)
            .into_iter()
            .map(|a| {
                let record = DeliveryRecord {
                    target: a.target(),
                    status: DeliveryStatus::Withheld,
                    digest: None,
                    reason: Some("meaning under negotiation".into()),
                };
                (a.agent_id, record)
            })
            .collect()
    }

    /// Compiles once per target and queues one delivery per recipient.
    fn deliver(&mut self, publisher: &str, stmt: &Cyberstatement) -> BTreeMap<String, DeliveryRecord> {
        let mut forms = BTreeMap::new();
        let mut out = BTreeMap::new();
        for agent in self.recipients(publisher) {
            let target = agent.target();
            let form = forms
                .entry(target)
                .or_insert_with(|| compile(stmt, target, &self.dialect))
                .clone();
            let record = match form {
                Ok(form) => {
                    let payload = json!({
                        "payload": form.payload,
                        "recipient": agent.agent_id,
                        "statement_id": form.source_statement_id,
                        "target": target,
                    });
                    self.outbox.push(Envelope {
                        to: agent.agent_id.clone(),
                        frame: Frame::new(MsgType::Delivery, payload.to_string()),
                    });
                    DeliveryRecord {
                        target,
                        status: DeliveryStatus::Delivered,
                        digest: Some(sha256_hex(form.text().as_bytes())),
                        reason: None,
                    }
                }
                Err(e) => DeliveryRecord {
                    target,
                    status: DeliveryStatus::Skipped,
                    digest: None,
                    reason: Some(e.to_string()),
                },
            };
            out.insert(agent.agent_id, record);
        }
        out
    }
}

fn components(stmt: &Cyberstatement) -> BTreeMap<Dimension, BTreeMap<String, String>> {
    Dimension::ALL
        .into_iter()
        .map(|d| {
            let slots = stmt
                .project(d)
                .map(|b| b.slots.iter().map(|(k, v)| (k.clone(), v.canonical())).collect())
                .unwrap_or_default();
            (d, slots)
        })
        .collect()
}
