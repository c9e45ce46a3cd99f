//! Scripted, tick-ordered runs of the broker.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::compiler::Dialect;
use crate::cybersign::{Cybersign, SignRegistry};
use crate::ids::IdGenerator;
use crate::semantics::{ContextSnapshot, MappingRegistry};

use super::agent::AgentProfile;
use super::broker::{Broker, DeliveryReport, Envelope, ReportStatus};
use super::corpus::{CorpusRecord, DeliveryStatus, Outcome};
use super::BusError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventKind {
    Publish {
        publisher: String,
        /// Statement source text.
        statement: String,
    },
    ContextUpdate {
        /// A context document, as in context files.
        context: Value,
    },
    InjectAmbiguity {
        lambda: String,
        sense: Cybersign,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEvent {
    /// Logical tick; strictly increasing over the script.
    pub at: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    /// Index into `events`.
    pub event: usize,
    /// `<metric> == <value>`, see [`Metric`].
    pub assert: String,
}

/// Registry files are resolved relative to the script. A missing dialect
/// means the bundled emergency-response dialect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioScript {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signs: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mappings: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dialect: Option<PathBuf>,
    pub agents: Vec<AgentProfile>,
    #[serde(default)]
    pub events: Vec<ScenarioEvent>,
    #[serde(default)]
    pub expectations: Vec<Expectation>,
}

/// What the assertions can look at after one event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Payloads delivered by this event.
    Deliveries,
    Skipped,
    Withheld,
    Dropped,
    /// `delivered`, `negotiating` or `failed` for the event's last report.
    Status,
    /// `resolved` or `ambiguous` for the record a publish appended.
    Outcome,
    /// Corpus length after the event.
    Records,
    /// Open sessions after the event.
    Pending,
}

impl Metric {
    fn parse(name: &str) -> Option<Metric> {
        Some(match name {
            "deliveries" => Metric::Deliveries,
            "skipped" => Metric::Skipped,
            "withheld" => Metric::Withheld,
            "dropped" => Metric::Dropped,
            "status" => Metric::Status,
            "outcome" => Metric::Outcome,
            "records" => Metric::Records,
            "pending" => Metric::Pending,
            _ => return None,
        })
    }
}

/// Observations after one event.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventResult {
    pub index: usize,
    pub at: u64,
    pub reports: Vec<DeliveryReport>,
    pub records: usize,
    pub pending: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<String>,
}

impl EventResult {
    fn observe(&self, metric: Metric) -> String {
        let count = |s: DeliveryStatus| self.reports.iter().map(|r| r.count(s)).sum::<usize>().to_string();
        match metric {
            Metric::Deliveries => count(DeliveryStatus::Delivered),
            Metric::Skipped => count(DeliveryStatus::Skipped),
            Metric::Withheld => count(DeliveryStatus::Withheld),
            Metric::Dropped => count(DeliveryStatus::Dropped),
            Metric::Status => match self.reports.last().map(|r| &r.status) {
                Some(ReportStatus::Delivered) => "delivered".into(),
                Some(ReportStatus::Negotiating { .. }) => "negotiating".into(),
                Some(ReportStatus::Failed { .. }) => "failed".into(),
                None => "none".into(),
            },
            Metric::Outcome => self.outcome.clone().unwrap_or_else(|| "none".into()),
            Metric::Records => self.records.to_string(),
            Metric::Pending => self.pending.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpectationResult {
    pub event: usize,
    pub assert: String,
    pub passed: bool,
    pub actual: String,
}

#[derive(Debug)]
pub struct ScenarioRun {
    pub corpus: Vec<CorpusRecord>,
    pub events: Vec<EventResult>,
    pub expectations: Vec<ExpectationResult>,
    /// Every frame the broker sent, in order.
    pub frames: Vec<Envelope>,
}

impl ScenarioRun {
    pub fn all_passed(&self) -> bool {
        self.expectations.iter().all(|e| e.passed)
    }
}

fn script_error(event: Option<usize>, message: impl Into<String>) -> BusError {
    BusError::Script {
        event,
        message: message.into(),
    }
}

impl ScenarioScript {
    pub fn from_json(text: &str) -> Result<ScenarioScript, BusError> {
        let value = crate::json::parse_strict(text).map_err(|e| script_error(None, e.to_string()))?;
        serde_json::from_value(value).map_err(|e| script_error(None, e.to_string()))
    }

    /// Loads a script and returns it with the directory its paths are
    /// relative to.
    pub fn load(path: impl AsRef<Path>) -> Result<(ScenarioScript, PathBuf), BusError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| BusError::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((ScenarioScript::from_json(&text)?, base))
    }

    /// Ticks increase, agents are unique, publishers are declared and
    /// expectations are well-formed.
    pub fn validate(&self) -> Result<(), BusError> {
        for (i, a) in self.agents.iter().enumerate() {
            if self.agents[..i].iter().any(|b| b.agent_id == a.agent_id) {
                return Err(script_error(None, format!("agent {} declared twice", a.agent_id)));
            }
        }
        for (i, e) in self.events.iter().enumerate() {
            if i > 0 && e.at <= self.events[i - 1].at {
                return Err(script_error(Some(i), "ticks must be strictly increasing"));
            }
            match &e.kind {
                EventKind::Publish { publisher, .. } if !self.agents.iter().any(|a| a.agent_id == *publisher) => {
                    return Err(script_error(Some(i), format!("undeclared publisher {publisher}")));
                }
                EventKind::InjectAmbiguity { lambda, sense } if sense.lambda() != lambda => {
                    return Err(script_error(
                        Some(i),
                        format!("sense is for `{}`, not `{lambda}`", sense.lambda()),
                    ));
                }
                _ => {}
            }
        }
        for x in &self.expectations {
            if x.event >= self.events.len() {
                return Err(script_error(
                    Some(x.event),
                    format!("expectation `{}` names a missing event", x.assert),
                ));
            }
            parse_assertion(&x.assert).map_err(|m| script_error(Some(x.event), m))?;
        }
        Ok(())
    }

    /// A broker loaded with this script's registries and agents.
    pub fn broker(&self, base: &Path, seed: u64) -> Result<Broker, BusError> {
        let io = |p: &Path, e: &dyn std::fmt::Display| BusError::Io(format!("{}: {e}", p.display()));
        let signs = match &self.signs {
            Some(p) => {
                let p = base.join(p);
                SignRegistry::load(&p).map_err(|e| io(&p, &e))?
            }
            None => SignRegistry::new(),
        };
        let mappings = match &self.mappings {
            Some(p) => {
                let p = base.join(p);
                MappingRegistry::load(&p).map_err(|e| io(&p, &e))?
            }
            None => MappingRegistry::new(),
        };
        let dialect = match &self.dialect {
            Some(p) => Dialect::load(base.join(p)).map_err(|e| script_error(None, e.to_string()))?,
            None => Dialect::emergency_response(),
        };
        let mut broker = Broker::new(dialect, signs, mappings, IdGenerator::seeded(seed));
        for a in &self.agents {
            broker
                .register(a.clone())
                .map_err(|e| script_error(None, e.to_string()))?;
        }
        Ok(broker)
    }
}

fn parse_assertion(text: &str) -> Result<(Metric, String), String> {
    let (lhs, rhs) = text
        .split_once("==")
        .ok_or_else(|| format!("`{text}`: expected `<metric> == <value>`"))?;
    let metric = Metric::parse(lhs.trim()).ok_or_else(|| format!("`{text}`: unknown metric `{}`", lhs.trim()))?;
    Ok((metric, rhs.trim().to_string()))
}

/// Runs every event in tick order and evaluates every expectation. The id
/// generator seeded with `seed` is the only source of randomness.
pub fn run_scenario(script: &ScenarioScript, base: &Path, seed: u64) -> Result<ScenarioRun, BusError> {
    script.validate()?;
    let mut broker = script.broker(base, seed)?;
    let mut events = Vec::new();
    let mut frames = Vec::new();
    for (i, event) in script.events.iter().enumerate() {
        broker.set_tick(event.at);
        let at_event = |e: BusError| script_error(Some(i), e.to_string());
        let (reports, outcome) = match &event.kind {
            EventKind::Publish { publisher, statement } => {
                let report = broker.publish_source(publisher, statement).map_err(at_event)?;
                let outcome = match broker.corpus().last().map(|r| &r.outcome) {
                    Some(Outcome::Resolved { .. }) => "resolved",
                    _ => "ambiguous",
                };
                (vec![report], Some(outcome.to_string()))
            }
            EventKind::ContextUpdate { context } => {
                let ctx = ContextSnapshot::from_json(&context.to_string())
                    .map_err(|e| script_error(Some(i), e.to_string()))?;
                (broker.update_context(ctx).map_err(at_event)?, None)
            }
            EventKind::InjectAmbiguity { sense, .. } => {
                broker.inject_sense(sense.clone()).map_err(at_event)?;
                (Vec::new(), None)
            }
        };
        frames.extend(broker.drain_outbox());
        events.push(EventResult {
            index: i,
            at: event.at,
            reports,
            records: broker.corpus().len(),
            pending: broker.pending_sessions().count(),
            outcome,
        });
    }
    let expectations = script
        .expectations
        .iter()
        .map(|x| {
            let (metric, expected) = parse_assertion(&x.assert).expect("validated");
            let actual = events[x.event].observe(metric);
            ExpectationResult {
                event: x.event,
                assert: x.assert.clone(),
                passed: actual == expected,
                actual,
            }
        })
        .collect();
    Ok(ScenarioRun {
        corpus: broker.into_corpus(),
        events,
        expectations,
        frames,
    })
}
