mod common;

use std::collections::BTreeSet;

use cyberlang::cybersign::{Dimension, SemanticValue, UnitCode};
use cyberlang::fdsg::{lex, parse, parse_with, print_canonical, DiagnosticCode, IntegrationDirective, TokenKind};
use cyberlang::IdGenerator;
use proptest::prelude::*;

use common::{random_statement, rng, WORKED_EXAMPLE, WORKED_EXAMPLE_CANONICAL};

#[test]
fn worked_example_parses_with_its_printed_values() {
    let s = parse(WORKED_EXAMPLE).unwrap();
    assert_eq!(s.present(), Dimension::ALL.into_iter().collect());
    let p = s.project(Dimension::P).unwrap();
    assert_eq!(p.get("sector"), Some(&SemanticValue::Identifier("A7".into())));
    assert_eq!(
        p.get("altitude"),
        Some(&SemanticValue::quantity(50.0, UnitCode::Metre).unwrap())
    );
    assert_eq!(
        p.get("duration"),
        Some(&SemanticValue::quantity(1800.0, UnitCode::Second).unwrap())
    );
    assert_eq!(
        s.slot(Dimension::T, "confidence"),
        Some(&SemanticValue::Probability(0.92))
    );
    assert_eq!(
        s.slot(Dimension::S, "authorisation"),
        Some(&SemanticValue::Identifier("alpha".into()))
    );
    assert_eq!(
        s.omega.directives,
        vec![
            IntegrationDirective::Precedence {
                higher: Dimension::P,
                lower: Dimension::S
            },
            IntegrationDirective::Parallel(Dimension::T, Dimension::C),
        ]
    );
    assert_eq!(print_canonical(&s), WORKED_EXAMPLE_CANONICAL);
}

#[test]
fn projection_of_thinking_block() {
    let s = parse(WORKED_EXAMPLE).unwrap();
    let t = s.project(Dimension::T).unwrap();
    let keys: Vec<_> = t.slots.keys().map(String::as_str).collect();
    assert_eq!(keys, ["intent", "confidence", "urgency"]);
    assert_eq!(t.get("urgency"), Some(&SemanticValue::Identifier("high".into())));
    let single = parse("[P: a=1]").unwrap();
    assert!(single.project(Dimension::C).is_none());
}

#[test]
fn unicode_and_ascii_renderings_agree() {
    let ascii = WORKED_EXAMPLE
        .replace("⊕Ω", "+O")
        .replace('≻', ">")
        .replace('∥', "||")
        .replace('α', "alpha");
    let a = parse(WORKED_EXAMPLE).unwrap();
    let b = parse(&ascii).unwrap();
    assert!(a.same_structure(&b));
    let ka: Vec<_> = lex("[⊕Ω: P≻S, T∥C]").unwrap().into_iter().map(|t| t.kind).collect();
    let kb: Vec<_> = lex("[+O: P>S, T||C]").unwrap().into_iter().map(|t| t.kind).collect();
    assert_eq!(ka, kb);
    assert_eq!(ka[1], TokenKind::Omega);
}

/// All twelve ordered pairs of distinct dimensions.
fn pairs() -> Vec<(Dimension, Dimension)> {
    let mut v = Vec::new();
    for a in Dimension::ALL {
        for b in Dimension::ALL {
            if a != b {
                v.push((a, b));
            }
        }
    }
    v
}

fn permutations(items: &[Dimension]) -> Vec<Vec<Dimension>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Oracle: a precedence relation is acceptable iff some linear order of the
/// four dimensions is consistent with it.
fn has_linear_extension(rel: &[(Dimension, Dimension)]) -> bool {
    permutations(&Dimension::ALL).iter().any(|perm| {
        let pos = |d: Dimension| perm.iter().position(|&x| x == d).unwrap();
        rel.iter().all(|&(a, b)| pos(a) < pos(b))
    })
}

#[test]
fn precedence_acceptance_matches_linear_extension_oracle() {
    let all = pairs();
    let base = "[P: a=1] [S: a=1] [T: a=1] [C: a=1]";
    let mut accepted = 0;
    for mask in 0u32..(1 << all.len()) {
        let rel: Vec<_> = (0..all.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| all[i])
            .collect();
        if rel.is_empty() {
            continue;
        }
        let directives: Vec<String> = rel.iter().map(|(a, b)| format!("{a}>{b}")).collect();
        let src = format!("{base} [+O: {}]", directives.join(", "));
        let result = parse(&src);
        let two_cycle = rel.iter().any(|&(a, b)| rel.contains(&(b, a)));
        match (has_linear_extension(&rel), result) {
            (true, Ok(_)) => accepted += 1,
            (false, Err(diags)) => {
                let want = if two_cycle {
                    DiagnosticCode::ContradictoryDirectives
                } else {
                    DiagnosticCode::CyclicPrecedence
                };
                assert_eq!(diags.len(), 1, "{src}");
                assert_eq!(diags[0].code, want, "{src}");
            }
            (expected, got) => panic!("{src}: oracle says {expected}, parser says {got:?}"),
        }
    }
    // labelled DAGs on four nodes, minus the empty relation
    assert_eq!(accepted, 543 - 1);
}

#[test]
fn seeded_ids_are_deterministic() {
    let mut a = IdGenerator::seeded(42);
    let mut b = IdGenerator::seeded(42);
    let sa = parse_with("[P: a=1]", &mut a).unwrap();
    let sb = parse_with("[P: a=1]", &mut b).unwrap();
    assert_eq!(sa.statement_id, sb.statement_id);
    let sc = parse_with("[P: a=1]", &mut a).unwrap();
    assert_ne!(sa.statement_id, sc.statement_id);
}

#[test]
fn diagnostics_spans_are_in_bounds() {
    let bad = [
        "",
        "[",
        "]",
        "[P",
        "[P:",
        "[P: a",
        "[P: a=",
        "[P: a=1",
        "[P: a=1]]",
        "[Q: a=1]",
        "[P: a=1] [+O: P",
        "[P: a=1] [+O: P>",
        "[P: a=1] [+O: P~]",
        "[P: a=\"open",
        "[P: x=§]",
        "[P: a=1] junk",
        "   \n\n  ",
    ];
    for src in bad {
        let diags = parse(src).unwrap_err();
        assert!(!diags.is_empty(), "{src:?}");
        for d in diags {
            assert!(d.is_error());
            assert!(d.span.end() <= src.len(), "{src:?}: {d}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn print_then_parse_is_identity(seed in any::<u64>()) {
        let stmt = random_statement(&mut rng(seed));
        let text = print_canonical(&stmt);
        let back = parse(&text).map_err(|d| TestCaseError::fail(format!("{text}: {d:?}")))?;
        prop_assert!(back.same_structure(&stmt), "{}", text);
        prop_assert_eq!(print_canonical(&back), text);
    }

    #[test]
    fn accepted_precedence_is_a_dag(seed in any::<u64>()) {
        let stmt = random_statement(&mut rng(seed));
        let rel: Vec<_> = stmt.omega.directives.iter().filter_map(|d| match d {
            IntegrationDirective::Precedence { higher, lower } => Some((*higher, *lower)),
            _ => None,
        }).collect();
        prop_assert!(has_linear_extension(&rel));
    }

    #[test]
    fn arbitrary_input_never_panics_and_spans_stay_inside(src in "[\\[\\]PSTC+O:=,>|~a-z0-9.\" §α\n-]{0,40}") {
        if let Err(diags) = parse(&src) {
            prop_assert!(!diags.is_empty());
            for d in diags {
                prop_assert!(d.span.end() <= src.len());
            }
        }
    }

    #[test]
    fn projection_is_total(seed in any::<u64>()) {
        let stmt = random_statement(&mut rng(seed));
        let present: BTreeSet<_> = stmt.present();
        for d in Dimension::ALL {
            prop_assert_eq!(stmt.project(d).is_some(), present.contains(&d));
        }
    }
}
