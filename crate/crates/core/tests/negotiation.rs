mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use common::oracle::{self, Exploration};
use cyberlang::cybersign::{Cybersign, Dimension, SemanticValue, SignRegistry};
use cyberlang::negotiation::{
    negotiate, open_session, AlwaysReject, HonestResponder, InterpretationLedger, Interpreter, LearnedPriors,
    MessageBody, NegotiationSession, SessionState, BOOST_SCALE, DEFAULT_MAX_ROUNDS,
};
use cyberlang::semantics::{evaluate_meaning, AmbiguityError, ContextSnapshot, MappingRegistry, MeaningError, Overlay};
use cyberlang::IdGenerator;
use proptest::prelude::*;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn signs() -> SignRegistry {
    let mut signs = SignRegistry::load(data("signs.json")).unwrap();
    let social: Cybersign =
        serde_json::from_str(&std::fs::read_to_string(data("danger-social.sign.json")).unwrap()).unwrap();
    signs.register(social).unwrap();
    signs
}

const DANGER: &str = "[S: alert=danger] [T: urgency=high]";

fn tie() -> (cyberlang::Cyberstatement, AmbiguityError) {
    let mut stmt = cyberlang::parse(DANGER).unwrap();
    stmt.statement_id = "00000000-0000-4000-8000-00000000da6e".into();
    let err = evaluate_meaning(
        &stmt,
        &ContextSnapshot::empty(0),
        &signs(),
        &MappingRegistry::new(),
        &Overlay,
    )
    .unwrap_err();
    let MeaningError::Ambiguity(a) = err else {
        panic!("{err:?}")
    };
    (stmt, a)
}

fn session(max_rounds: u32) -> NegotiationSession {
    let (stmt, a) = tie();
    let mut s = open_session(
        &a,
        &stmt.statement_id,
        "resolver",
        "publisher",
        &mut IdGenerator::seeded(5),
    )
    .unwrap();
    s.max_rounds = max_rounds;
    s
}

#[test]
fn every_message_sequence_terminates() {
    for max_rounds in [0, 1, 2, 3, DEFAULT_MAX_ROUNDS] {
        let mut stats = Exploration::default();
        oracle::explore(&session(max_rounds), 0, &mut stats);
        assert!(
            stats.violations.is_empty(),
            "{:?}",
            &stats.violations[..stats.violations.len().min(5)]
        );
        assert_eq!(stats.stuck, 0, "max_rounds {max_rounds}");
        assert_eq!(stats.paths, stats.converged + stats.failed);
        assert!(stats.converged > 0 || max_rounds == 0);
        // report, explicitation pair, then one message per round plus a closing answer
        assert!(
            stats.max_depth <= max_rounds as usize + 3,
            "depth {} at max_rounds {max_rounds}",
            stats.max_depth
        );
    }
}

fn interpreter(ctx: &str) -> Interpreter {
    let (stmt, _) = tie();
    Interpreter {
        stmt,
        signs: signs(),
        registry: MappingRegistry::new(),
        private: ContextSnapshot::from_json(ctx).unwrap(),
    }
}

const EVACUATION: &str = r#"{"S": {"notice": "s:notice/evacuation-order"}}"#;
const OPINION: &str = r#"{"T": {"mood": "t:bias/judgment"}}"#;
const NOTHING: &str = "{}";

fn run(resolver_ctx: &str, publisher_ctx: &str) -> NegotiationSession {
    let mut resolver = HonestResponder::new("resolver", interpreter(resolver_ctx));
    let mut publisher = HonestResponder::new("publisher", interpreter(publisher_ctx));
    negotiate(session(DEFAULT_MAX_ROUNDS), &mut resolver, &mut publisher).unwrap()
}

fn physical_digest() -> String {
    let i = interpreter(NOTHING);
    let sense = signs().lookup("danger")[0].clone();
    assert_eq!(sense.dyad(Dimension::P).signified.to_string(), "p:hazard/obstacle");
    i.interpretation_digest("danger", &sense).unwrap()
}

#[test]
fn honest_parties_converge_on_danger_within_three_rounds() {
    for (r, p) in [(NOTHING, EVACUATION), (EVACUATION, EVACUATION), (EVACUATION, NOTHING)] {
        let s = run(r, p);
        assert_eq!(s.state, SessionState::Converged, "{r} / {p}: {:#?}", s.transcript);
        assert!(s.round <= 3, "{} rounds", s.round);
        assert_eq!(s.agreed.as_deref(), Some(physical_digest().as_str()));
    }
    // the publisher's context alone settles it through explicitation
    let s = run(NOTHING, EVACUATION);
    let kinds: Vec<_> = s.transcript.iter().map(|m| m.kind()).collect();
    use cyberlang::negotiation::MessageKind::*;
    assert_eq!(
        kinds,
        [
            AmbiguityReport,
            ExplicitationRequest,
            ExplicitationResponse,
            Proposal,
            Accept
        ]
    );
    assert_eq!(s.round, 1);
}

#[test]
fn disagreement_runs_out_of_rounds() {
    let s = run(OPINION, EVACUATION);
    assert_eq!(s.state, SessionState::Failed);
    assert_eq!(s.round, DEFAULT_MAX_ROUNDS);
    let s = run(NOTHING, NOTHING);
    assert_eq!(s.state, SessionState::Failed, "nobody can explicate");
}

#[test]
fn always_reject_fails_immediately() {
    let mut resolver = HonestResponder::new("resolver", interpreter(EVACUATION));
    let mut publisher = AlwaysReject { id: "publisher".into() };
    let s = negotiate(session(DEFAULT_MAX_ROUNDS), &mut resolver, &mut publisher).unwrap();
    assert_eq!(s.state, SessionState::Failed);
    assert_eq!(s.transcript.len(), 3);
    assert!(matches!(
        s.last().body,
        MessageBody::Reject {
            counter_digest: None,
            ..
        }
    ));
}

#[test]
fn replay_rebuilds_every_outcome() {
    for (r, p) in [(NOTHING, EVACUATION), (OPINION, EVACUATION), (NOTHING, NOTHING)] {
        let s = run(r, p);
        let again = NegotiationSession::replay(&s.transcript, "publisher", DEFAULT_MAX_ROUNDS).unwrap();
        assert_eq!(again, s);
        let wire: Vec<_> = s
            .transcript
            .iter()
            .map(|m| cyberlang::negotiation::NegotiationMessage::from_json(&m.to_json()).unwrap())
            .collect();
        assert_eq!(wire, s.transcript);
    }
}

#[test]
fn learned_priors_break_the_tie_after_agreement() {
    let (stmt, _) = tie();
    let s = run(NOTHING, EVACUATION);
    let agreed = signs()
        .lookup("danger")
        .iter()
        .find(|c| interpreter(NOTHING).interpretation_digest("danger", c).unwrap() == *s.agreed.as_ref().unwrap())
        .unwrap()
        .clone();
    let mut ledger = InterpretationLedger::new();
    let empty = ContextSnapshot::empty(0);
    ledger.record_outcome(&empty, "danger", &agreed);
    let m = evaluate_meaning(
        &stmt,
        &empty,
        &signs(),
        &MappingRegistry::new(),
        &LearnedPriors { ledger: &ledger },
    )
    .unwrap();
    assert_eq!(m.sign_bindings["danger"], agreed);
    // context evidence still beats the learned prior
    let opinion = ContextSnapshot::from_json(OPINION).unwrap();
    let m = evaluate_meaning(
        &stmt,
        &opinion,
        &signs(),
        &MappingRegistry::new(),
        &LearnedPriors { ledger: &ledger },
    )
    .unwrap();
    assert_ne!(m.sign_bindings["danger"], agreed);
}

proptest! {
    #[test]
    fn boosts_follow_counts_and_stay_below_scale(choices in proptest::collection::vec((0usize..2, 0usize..3), 0..60)) {
        let senses: Vec<Cybersign> = signs().lookup("danger").to_vec();
        let shapes = [
            ContextSnapshot::empty(0),
            ContextSnapshot::from_json(EVACUATION).unwrap(),
            ContextSnapshot::from_json(r#"{"S": {"notice": "s:risk/public-opinion"}}"#).unwrap(),
        ];
        let mut ledger = InterpretationLedger::new();
        let mut counts: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for &(sense, shape) in &choices {
            ledger.record_outcome(&shapes[shape], "danger", &senses[sense]);
            // contexts 1 and 2 share a shape
            let shape = shape.min(1);
            *counts.entry((shape, sense)).or_default() += 1;
        }
        for (i, ctx) in shapes.iter().enumerate() {
            let shape = i.min(1);
            let total: u64 = counts.iter().filter(|((s, _), _)| *s == shape).map(|(_, c)| c).sum();
            let boosts = ledger.prior_boost(ctx, "danger", &senses);
            for (j, sense) in senses.iter().enumerate() {
                let b = boosts[&sense.digest()];
                let n = counts.get(&(shape, j)).copied().unwrap_or(0);
                prop_assert!((0.0..BOOST_SCALE).contains(&b));
                prop_assert_eq!(b, n as f64 / (1 + total) as f64 * BOOST_SCALE);
            }
            prop_assert!(ledger.prior_boost(ctx, "other", &senses).values().all(|b| *b == 0.0));
        }
        let round_trip = InterpretationLedger::from_jsonl(&ledger.to_jsonl()).unwrap();
        prop_assert_eq!(round_trip, ledger);
    }
}

#[test]
fn explicated_values_are_sense_signifieds() {
    let s = run(NOTHING, EVACUATION);
    let MessageBody::ExplicitationResponse { value, dimension, .. } = &s.transcript[2].body else {
        panic!()
    };
    assert_eq!(*dimension, Dimension::S);
    assert_eq!(
        *value,
        SemanticValue::Reference("s:notice/evacuation-order".parse().unwrap())
    );
}
