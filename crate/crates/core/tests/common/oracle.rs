//! Reference implementations the library is checked against. Each one is
//! written from the contract, naively, without reusing library internals.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use cyberlang::compiler::Dialect;
use cyberlang::cybersign::{Dimension, Reference, SemanticValue, UnitCode, ValueKind};
use cyberlang::fdsg::{ComponentBlock, Cyberstatement, IntegrationDirective};
use cyberlang::negotiation::{MessageBody, MessageKind, NegotiationMessage, NegotiationSession, SessionState};
use cyberlang::semantics::{MappingKind, MappingRegistry};
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::Value;

pub const NON_CYBER: [Dimension; 3] = [Dimension::P, Dimension::S, Dimension::T];

// ---- mapping tables ---------------------------------------------------------

/// Three random bijections of `n` pairs each, drawn against a shared pool of
/// cyber terms so that two-hop compositions are defined on only part of the
/// domain. Returns the registry and the same pairs as plain lists.
pub fn random_tables(
    rng: &mut impl Rng,
    n: usize,
) -> (MappingRegistry, BTreeMap<Dimension, Vec<(Reference, Reference)>>) {
    let pool: Vec<Reference> = (0..n * 3 / 2)
        .map(|i| Reference::new(Dimension::C, format!("term/{i}")).unwrap())
        .collect();
    let mut registry = MappingRegistry::new();
    let mut lists = BTreeMap::new();
    for d in NON_CYBER {
        let mut cyber = pool.clone();
        cyber.shuffle(rng);
        let ns = d.to_string().to_lowercase();
        let pairs: Vec<(Reference, Reference)> = (0..n)
            .map(|i| {
                let domain: Reference = format!("{ns}:item/{i}-{}", rng.random_range(0..1000)).parse().unwrap();
                (domain, cyber[i].clone())
            })
            .collect();
        for (a, c) in &pairs {
            registry
                .insert(MappingKind::for_dimension(d).unwrap(), a.clone(), c.clone())
                .unwrap();
        }
        lists.insert(d, pairs);
    }
    (registry, lists)
}

/// `to`-side preimage of `from`'s image of `x`, by linear search.
pub fn two_hop(from: &[(Reference, Reference)], to: &[(Reference, Reference)], x: &Reference) -> Option<Reference> {
    let c = from.iter().find(|(a, _)| a == x).map(|(_, c)| c)?;
    to.iter().find(|(_, c2)| c2 == c).map(|(b, _)| b.clone())
}

// ---- integration operators ----------------------------------------------------

/// Every precedence and parallel directive on four dimensions, plus three
/// fixed blends.
pub fn directive_universe() -> Vec<IntegrationDirective> {
    let mut out = Vec::new();
    for a in Dimension::ALL {
        for b in Dimension::ALL {
            if a != b {
                out.push(IntegrationDirective::Precedence { higher: a, lower: b });
                if a < b {
                    out.push(IntegrationDirective::Parallel(a, b));
                }
            }
        }
    }
    let blend = |w: &[(Dimension, f64)]| IntegrationDirective::Blend(w.iter().copied().collect());
    use Dimension::*;
    out.push(blend(&[(P, 0.4), (S, 0.3), (T, 0.2), (C, 0.1)]));
    out.push(blend(&[(P, 0.5)]));
    out.push(blend(&[(P, 0.25), (S, 0.25), (T, 0.25), (C, 0.25)]));
    out
}

/// All subsets of `items` with at most `k` elements, as index lists.
pub fn subsets(len: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, len: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(cur.clone());
        if cur.len() == k {
            return;
        }
        for i in start..len {
            cur.push(i);
            go(i + 1, len, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, len, k, &mut Vec::new(), &mut out);
    out
}

pub fn nonempty_dimension_sets() -> Vec<BTreeSet<Dimension>> {
    (1u8..16)
        .map(|mask| {
            Dimension::ALL
                .into_iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, d)| d)
                .collect()
        })
        .collect()
}

pub const TOL: f64 = 1e-9;

/// The strict order an operator induces: `prec` holds `(a, b)` when `a`
/// outranks `b`. `None` when the directives contradict each other.
#[derive(Debug, Clone)]
pub struct OracleOrder {
    pub prec: HashSet<(Dimension, Dimension)>,
    pub par: HashSet<(Dimension, Dimension)>,
}

pub fn order_oracle(directives: &[IntegrationDirective]) -> Option<OracleOrder> {
    // parallelism as an equivalence, by fixpoint
    let mut par: HashSet<(Dimension, Dimension)> = Dimension::ALL.iter().map(|&d| (d, d)).collect();
    for d in directives {
        if let IntegrationDirective::Parallel(a, b) = d {
            par.insert((*a, *b));
            par.insert((*b, *a));
        }
    }
    loop {
        let extra: Vec<_> = par
            .iter()
            .flat_map(|&(a, b)| par.iter().filter(move |&&(c, _)| c == b).map(move |&(_, e)| (a, e)))
            .filter(|p| !par.contains(p))
            .collect();
        if extra.is_empty() {
            break;
        }
        par.extend(extra);
    }
    // precedence lifted to equivalents, then closed
    let mut prec: HashSet<(Dimension, Dimension)> = HashSet::new();
    for d in directives {
        if let IntegrationDirective::Precedence { higher, lower } = d {
            for &(x, h) in &par {
                for &(l, y) in &par {
                    if h == *higher && l == *lower {
                        prec.insert((x, y));
                    }
                }
            }
        }
    }
    loop {
        let extra: Vec<_> = prec
            .iter()
            .flat_map(|&(a, b)| prec.iter().filter(move |&&(c, _)| c == b).map(move |&(_, e)| (a, e)))
            .filter(|p| !prec.contains(p))
            .collect();
        if extra.is_empty() {
            break;
        }
        prec.extend(extra);
    }
    if prec.iter().any(|&(a, b)| a == b || par.contains(&(a, b))) {
        return None;
    }
    par.retain(|(a, b)| a != b);
    Some(OracleOrder { prec, par })
}

/// Expected weights, or `None` when the operator must be rejected.
pub fn weight_oracle(
    directives: &[IntegrationDirective],
    present: &BTreeSet<Dimension>,
) -> Option<BTreeMap<Dimension, f64>> {
    let mentioned = |d: &IntegrationDirective| -> Vec<Dimension> {
        match d {
            IntegrationDirective::Precedence { higher, lower } => vec![*higher, *lower],
            IntegrationDirective::Parallel(a, b) => vec![*a, *b],
            IntegrationDirective::Blend(w) => w.keys().copied().collect(),
        }
    };
    if directives.iter().flat_map(mentioned).any(|d| !present.contains(&d)) {
        return None;
    }
    let blends: Vec<&BTreeMap<Dimension, f64>> = directives
        .iter()
        .filter_map(|d| match d {
            IntegrationDirective::Blend(w) => Some(w),
            _ => None,
        })
        .collect();
    if blends.len() > 1 {
        return None;
    }
    let order = order_oracle(directives)?;
    let weights: BTreeMap<Dimension, f64> = match blends.first() {
        Some(listed) => {
            let total: f64 = listed.values().sum();
            if total > 1.0 + TOL || (listed.len() == present.len() && (total - 1.0).abs() > TOL) {
                return None;
            }
            let rest: Vec<Dimension> = present.iter().copied().filter(|d| !listed.contains_key(d)).collect();
            let share = (1.0 - total).max(0.0) / rest.len().max(1) as f64;
            present
                .iter()
                .map(|d| (*d, listed.get(d).copied().unwrap_or(share)))
                .collect()
        }
        None => {
            let n = present.len() as f64;
            let score = |d: Dimension| {
                let below = present.iter().filter(|&&x| order.prec.contains(&(d, x))).count() as f64;
                let above = present.iter().filter(|&&x| order.prec.contains(&(x, d))).count() as f64;
                n + below - above
            };
            let total: f64 = present.iter().map(|&d| score(d)).sum();
            present.iter().map(|&d| (d, score(d) / total)).collect()
        }
    };
    for &(a, b) in &order.prec {
        if present.contains(&a) && present.contains(&b) && weights[&a] <= weights[&b] + TOL {
            return None;
        }
    }
    for &(a, b) in &order.par {
        if present.contains(&a) && present.contains(&b) && (weights[&a] - weights[&b]).abs() > TOL {
            return None;
        }
    }
    Some(weights)
}

// ---- negotiation ---------------------------------------------------------------

#[derive(Debug, Default)]
pub struct Exploration {
    pub paths: u64,
    pub converged: u64,
    pub failed: u64,
    /// Maximal paths that ended in a non-terminal state.
    pub stuck: u64,
    pub max_depth: usize,
    pub nodes: u64,
    /// Problems found along the way; empty when the machine is sound.
    pub violations: Vec<String>,
}

fn candidate_bodies(session: &NegotiationSession) -> Vec<MessageBody> {
    let stmt = session.subject_statement_id.clone();
    let pending = session.pending.as_ref().map(|p| p.digest.clone()).unwrap_or_default();
    let mut out = vec![
        MessageBody::AmbiguityReport {
            statement_id: stmt.clone(),
            dimension: Dimension::S,
            key: "alert".into(),
            candidate_digests: vec!["x".into(), "y".into()],
        },
        MessageBody::ExplicitationRequest {
            statement_id: stmt.clone(),
            dimension: Dimension::S,
            key: "alert".into(),
        },
        MessageBody::ExplicitationRequest {
            statement_id: "other".into(),
            dimension: Dimension::S,
            key: "alert".into(),
        },
        MessageBody::ExplicitationResponse {
            statement_id: stmt.clone(),
            dimension: Dimension::S,
            key: "alert".into(),
            value: SemanticValue::identifier("notice").unwrap(),
        },
        MessageBody::MetaMarker(cyberlang::negotiation::MetaMarker {
            target_statement_id: stmt,
            dimension: Dimension::S,
            overrides: BTreeMap::new(),
        }),
        MessageBody::Accept {
            interpretation_digest: pending.clone(),
        },
        MessageBody::Accept {
            interpretation_digest: "wrong".into(),
        },
        MessageBody::Reject {
            interpretation_digest: pending.clone(),
            reason: String::new(),
            counter_digest: None,
        },
        MessageBody::Reject {
            interpretation_digest: "wrong".into(),
            reason: String::new(),
            counter_digest: Some("x".into()),
        },
    ];
    for d in ["x", "y"] {
        out.push(MessageBody::Proposal {
            interpretation_digest: d.into(),
        });
        out.push(MessageBody::Reject {
            interpretation_digest: pending.clone(),
            reason: String::new(),
            counter_digest: Some(d.into()),
        });
    }
    out
}

/// Depth-first search over every message either participant could send, at
/// every reachable state.
pub fn explore(session: &NegotiationSession, depth: usize, stats: &mut Exploration) {
    stats.nodes += 1;
    stats.max_depth = stats.max_depth.max(depth);
    let mut moved = false;
    for sender in session.participants.clone() {
        let mut accepted_kinds = BTreeSet::new();
        for body in candidate_bodies(session) {
            let msg: NegotiationMessage = session.message(&sender, body);
            let mut next = session.clone();
            match next.apply(&msg) {
                Ok(()) => {
                    accepted_kinds.insert(msg.kind());
                    if next.round < session.round || next.round > next.max_rounds {
                        stats
                            .violations
                            .push(format!("round went from {} to {}", session.round, next.round));
                    }
                    if next.transcript.len() != session.transcript.len() + 1 {
                        stats.violations.push("accepted message not recorded".into());
                    }
                    moved = true;
                    explore(&next, depth + 1, stats);
                }
                Err(_) => {
                    if next != *session {
                        stats
                            .violations
                            .push(format!("rejected {:?} changed the session", msg.kind()));
                    }
                }
            }
        }
        let legal: BTreeSet<MessageKind> = session.legal_kinds(&sender).into_iter().collect();
        if legal != accepted_kinds {
            stats.violations.push(format!(
                "{:?}: legal_kinds {legal:?} but accepted {accepted_kinds:?}",
                session.state
            ));
        }
    }
    if !moved {
        stats.paths += 1;
        match session.state {
            SessionState::Converged => stats.converged += 1,
            SessionState::Failed => stats.failed += 1,
            _ => stats.stuck += 1,
        }
    } else if session.state.is_terminal() {
        stats.violations.push("a terminal session accepted a message".into());
    }
}

// ---- statements that fit the bundled dialect ------------------------------------

fn fitting_value(rng: &mut impl Rng, kind: ValueKind, unit: Option<UnitCode>) -> SemanticValue {
    match kind {
        ValueKind::Identifier => SemanticValue::Identifier(super::random_identifier(rng)),
        ValueKind::Probability => SemanticValue::probability(rng.random::<f64>()).unwrap(),
        ValueKind::Quantity => {
            let magnitude = rng.random_range(0..100_000) as f64 / 10.0;
            SemanticValue::quantity(magnitude, unit.unwrap_or(UnitCode::ALL[0])).unwrap()
        }
        ValueKind::Number => SemanticValue::number(rng.random_range(-1e6..1e6)).unwrap(),
        ValueKind::Text => SemanticValue::Text("t".into()),
        ValueKind::Reference => SemanticValue::Reference(super::random_reference(rng)),
    }
}

/// A random statement using only slots the dialect admits, each with a value
/// of the admitted type.
pub fn dialect_statement(rng: &mut impl Rng, dialect: &Dialect) -> Cyberstatement {
    loop {
        let mut blocks = BTreeMap::new();
        for (d, slots) in &dialect.allowed_slots {
            if !rng.random_bool(0.7) {
                continue;
            }
            let mut keys: Vec<&String> = slots.keys().collect();
            keys.shuffle(rng);
            let take = rng.random_range(1..=keys.len());
            let mut block = ComponentBlock::new(*d);
            for key in &keys[..take] {
                let c = &slots[*key];
                block.slots.insert((*key).clone(), fitting_value(rng, c.kind, c.unit));
            }
            blocks.insert(*d, block);
        }
        if blocks.is_empty() {
            continue;
        }
        let present = blocks.keys().copied().collect();
        let omega = super::random_operator(rng, &present);
        let stmt = Cyberstatement {
            blocks,
            omega,
            statement_id: format!("gen-{}", rng.random::<u32>()),
        };
        if stmt.validate().is_ok() {
            return stmt;
        }
    }
}

// ---- provenance ---------------------------------------------------------------

/// Everything a compiled payload may legitimately contain.
pub struct Provenance {
    pieces: BTreeSet<String>,
    numbers: Vec<f64>,
}

fn capitalized(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

impl Provenance {
    pub fn new(stmt: &Cyberstatement, dialect: &Dialect) -> Provenance {
        let mut pieces = BTreeSet::new();
        let mut numbers = Vec::new();
        pieces.insert(stmt.statement_id.clone());
        for d in Dimension::ALL {
            pieces.insert(d.to_string());
        }
        for block in stmt.blocks.values() {
            for (k, v) in &block.slots {
                pieces.insert(k.clone());
                pieces.insert(v.canonical());
                pieces.insert(capitalized(&v.canonical()));
            }
        }
        for d in &stmt.omega.directives {
            if let IntegrationDirective::Blend(w) = d {
                numbers.extend(w.values());
            }
        }
        // dialect literals
        for t in &dialect.nl_templates {
            pieces.extend(t.template.literals().map(String::from));
        }
        for r in &dialect.robot_rules {
            pieces.insert(r.cmd.clone());
            for (name, t) in &r.args {
                pieces.insert(name.clone());
                pieces.extend(t.literals().map(String::from));
            }
        }
        pieces.extend(dialect.twin_paths.values().cloned());
        // target vocabularies
        for word in [
            "statement_id",
            "omega",
            "order",
            "prec",
            "par",
            "blend",
            "cmd",
            "args",
            "concurrent_group",
            "path",
            "value",
            "ts",
            "$ts",
        ] {
            pieces.insert(word.to_string());
        }
        pieces.retain(|p| !p.is_empty());
        Provenance { pieces, numbers }
    }

    /// True when `s` is a concatenation of allowed pieces.
    pub fn derivable(&self, s: &str) -> bool {
        let mut ok = vec![false; s.len() + 1];
        ok[0] = true;
        for i in 0..s.len() {
            if !ok[i] || !s.is_char_boundary(i) {
                continue;
            }
            for p in &self.pieces {
                if s[i..].starts_with(p.as_str()) {
                    ok[i + p.len()] = true;
                }
            }
        }
        ok[s.len()]
    }

    /// Strings, keys and numbers in `payload` with no source.
    pub fn scan(&self, payload: &Value) -> Vec<String> {
        let mut bad = Vec::new();
        self.walk(payload, None, &mut bad);
        bad
    }

    fn walk(&self, v: &Value, key: Option<&str>, bad: &mut Vec<String>) {
        match v {
            Value::String(s) if !self.derivable(s) => bad.push(s.clone()),
            Value::Number(n) => {
                let x = n.as_f64().unwrap();
                let structural = key == Some("concurrent_group") && n.is_u64();
                if !structural && !self.numbers.contains(&x) {
                    bad.push(n.to_string());
                }
            }
            Value::Bool(_) => bad.push(v.to_string()),
            Value::Array(items) => items.iter().for_each(|i| self.walk(i, key, bad)),
            Value::Object(map) => {
                for (k, item) in map {
                    if !self.derivable(k) {
                        bad.push(k.clone());
                    }
                    self.walk(item, Some(k), bad);
                }
            }
            _ => {}
        }
    }
}
