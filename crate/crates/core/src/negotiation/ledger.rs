use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use crate::cybersign::Cybersign;
use crate::digest::json_digest;
use crate::semantics::{ContextSnapshot, Integration, IntegrationInput, IntegrationStrategy, Overlay};

use super::NegotiationError;

/// Boosts never reach this value, so one unit of context evidence always
/// outweighs any learned prior.
pub const BOOST_SCALE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerRecord {
    pub context_signature: String,
    pub lambda: String,
    pub chosen_sign_digest: String,
    pub count: u64,
}

/// Counts of past resolutions, keyed by (context shape, lambda, sign).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InterpretationLedger {
    counts: BTreeMap<(String, String, String), u64>,
}

/// Hash of the sorted `(dimension, key)` pairs of a context. Values are
/// ignored, so contexts of the same shape share a signature.
pub fn context_signature(ctx: &ContextSnapshot) -> String {
    let pairs: Vec<(String, String)> = crate::cybersign::Dimension::ALL
        .into_iter()
        .flat_map(|d| ctx.state(d).keys().map(move |k| (d.to_string(), k.clone())))
        .collect();
    json_digest(&serde_json::to_value(pairs).expect("serializable"))
}

impl InterpretationLedger {
    pub fn new() -> InterpretationLedger {
        InterpretationLedger::default()
    }

    /// Counts one more choice of `chosen` for `lambda` in a context shaped
    /// like `ctx`; returns the updated record.
    pub fn record_outcome(&mut self, ctx: &ContextSnapshot, lambda: &str, chosen: &Cybersign) -> LedgerRecord {
        let key = (context_signature(ctx), lambda.to_string(), chosen.digest());
        let count = self.counts.entry(key.clone()).or_insert(0);
        *count += 1;
        LedgerRecord {
            context_signature: key.0,
            lambda: key.1,
            chosen_sign_digest: key.2,
            count: *count,
        }
    }

    pub fn count(&self, signature: &str, lambda: &str, digest: &str) -> u64 {
        self.counts
            .get(&(signature.to_string(), lambda.to_string(), digest.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn records(&self) -> Vec<LedgerRecord> {
        self.counts
            .iter()
            .map(|((s, l, d), c)| LedgerRecord {
                context_signature: s.clone(),
                lambda: l.clone(),
                chosen_sign_digest: d.clone(),
                count: *c,
            })
            .collect()
    }

    /// `count(c) / (1 + total) * 0.5` per candidate digest, in `[0, 0.5)`.
    pub fn prior_boost(&self, ctx: &ContextSnapshot, lambda: &str, candidates: &[Cybersign]) -> BTreeMap<String, f64> {
        let signature = context_signature(ctx);
        let total: u64 = self
            .counts
            .iter()
            .filter(|((s, l, _), _)| *s == signature && l == lambda)
            .map(|(_, c)| c)
            .sum();
        candidates
            .iter()
            .map(|c| {
                let digest = c.digest();
                let n = self.count(&signature, lambda, &digest);
                (digest, n as f64 / (1 + total) as f64 * BOOST_SCALE)
            })
            .collect()
    }

    /// Reads an append-only JSONL log; later lines for the same triple win.
    pub fn from_jsonl(text: &str) -> Result<InterpretationLedger, NegotiationError> {
        let mut ledger = InterpretationLedger::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r: LedgerRecord =
                serde_json::from_str(line).map_err(|e| NegotiationError::Ledger(format!("line {}: {e}", i + 1)))?;
            if r.count == 0 {
                return Err(NegotiationError::Ledger(format!(
                    "line {}: count must be positive",
                    i + 1
                )));
            }
            ledger
                .counts
                .insert((r.context_signature, r.lambda, r.chosen_sign_digest), r.count);
        }
        Ok(ledger)
    }

    pub fn to_jsonl(&self) -> String {
        self.records().iter().map(|r| record_line(r) + "\n").collect()
    }

    /// A missing file is an empty ledger.
    pub fn load(path: impl AsRef<Path>) -> Result<InterpretationLedger, NegotiationError> {
        match std::fs::read_to_string(path) {
            Ok(text) => InterpretationLedger::from_jsonl(&text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(InterpretationLedger::new()),
            Err(e) => Err(NegotiationError::Ledger(e.to_string())),
        }
    }

    pub fn append(path: impl AsRef<Path>, record: &LedgerRecord) -> Result<(), NegotiationError> {
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| NegotiationError::Ledger(e.to_string()))?;
        writeln!(f, "{}", record_line(record)).map_err(|e| NegotiationError::Ledger(e.to_string()))
    }
}

fn record_line(r: &LedgerRecord) -> String {
    serde_json::to_string(&serde_json::to_value(r).expect("serializable")).expect("serializable")
}

/// Concurrent readers, serialized writers.
#[derive(Debug, Clone, Default)]
pub struct SharedLedger(Arc<RwLock<InterpretationLedger>>);

impl SharedLedger {
    pub fn new(ledger: InterpretationLedger) -> SharedLedger {
        SharedLedger(Arc::new(RwLock::new(ledger)))
    }

    pub fn record_outcome(&self, ctx: &ContextSnapshot, lambda: &str, chosen: &Cybersign) -> LedgerRecord {
        self.0.write().record_outcome(ctx, lambda, chosen)
    }

    pub fn snapshot(&self) -> InterpretationLedger {
        self.0.read().clone()
    }
}

/// Overlay integration whose sense tie-breaks come from a ledger.
pub struct LearnedPriors<'a> {
    pub ledger: &'a InterpretationLedger,
}

impl IntegrationStrategy for LearnedPriors<'_> {
    fn integrate(&self, input: &IntegrationInput<'_>) -> Integration {
        Overlay.integrate(input)
    }

    fn sign_prior(&self, lambda: &str, candidate: &Cybersign, ctx: &ContextSnapshot) -> f64 {
        let boosts = self.ledger.prior_boost(ctx, lambda, std::slice::from_ref(candidate));
        boosts.values().next().copied().unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cybersign::{Dimension, Reference, SemanticValue};

    fn r(s: &str) -> Reference {
        s.parse().unwrap()
    }

    fn sense(p: &str) -> Cybersign {
        Cybersign::from_parts(
            "danger",
            [("a", r(p)), ("b", r("s:x")), ("c", r("t:x")), ("d", r("c:x"))],
        )
        .unwrap()
    }

    fn ctx(v: &str) -> ContextSnapshot {
        ContextSnapshot::empty(0).with(Dimension::P, "seen", SemanticValue::identifier(v).unwrap(), false)
    }

    #[test]
    fn aggregation_and_shape_signature() {
        let mut l = InterpretationLedger::new();
        l.record_outcome(&ctx("a"), "danger", &sense("p:one"));
        let rec = l.record_outcome(&ctx("b"), "danger", &sense("p:one"));
        assert_eq!(rec.count, 2);
        assert_eq!(l.records().len(), 1);
        assert_eq!(context_signature(&ctx("a")), context_signature(&ctx("b")));
        assert_ne!(
            context_signature(&ctx("a")),
            context_signature(&ContextSnapshot::empty(0))
        );
    }

    #[test]
    fn boosts() {
        let (one, two) = (sense("p:one"), sense("p:two"));
        let mut l = InterpretationLedger::new();
        let c = ctx("a");
        let empty = l.prior_boost(&c, "danger", &[one.clone(), two.clone()]);
        assert!(empty.values().all(|b| *b == 0.0));
        for _ in 0..3 {
            l.record_outcome(&c, "danger", &one);
        }
        l.record_outcome(&c, "danger", &two);
        let b = l.prior_boost(&c, "danger", &[one.clone(), two.clone()]);
        assert!((b[&one.digest()] - 0.3).abs() < 1e-12);
        assert!((b[&two.digest()] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn jsonl_last_record_wins() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        let mut l = InterpretationLedger::new();
        for _ in 0..3 {
            let rec = l.record_outcome(&ctx("a"), "danger", &sense("p:one"));
            InterpretationLedger::append(&path, &rec).unwrap();
        }
        let back = InterpretationLedger::load(&path).unwrap();
        assert_eq!(back, l);
        assert_eq!(back.total(), 3);
        assert_eq!(InterpretationLedger::from_jsonl(&l.to_jsonl()).unwrap(), l);
        assert!(InterpretationLedger::load(dir.path().join("missing")).unwrap().total() == 0);
    }
}
