#![allow(dead_code)]

pub mod oracle;

use std::collections::{BTreeMap, BTreeSet};

use cyberlang::cybersign::{Dimension, Reference, SemanticValue, UnitCode};
use cyberlang::fdsg::{ComponentBlock, Cyberstatement, IntegrationDirective, IntegrationOperator};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const ALNUM: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

pub fn random_key(rng: &mut impl Rng) -> String {
    let mut s = String::new();
    s.push((b'a' + rng.random_range(0..26)) as char);
    for _ in 0..rng.random_range(0..8) {
        let c = *b"abcdefghijklmnopqrstuvwxyz0123456789-".choose(rng).unwrap();
        s.push(c as char);
    }
    s
}

pub fn random_identifier(rng: &mut impl Rng) -> String {
    let mut s = String::new();
    s.push(
        *b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
            .choose(rng)
            .unwrap() as char,
    );
    for _ in 0..rng.random_range(0..10) {
        let pool = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-";
        s.push(*pool.choose(rng).unwrap() as char);
    }
    s
}

fn random_text(rng: &mut impl Rng) -> String {
    let pool = [
        'a', 'Z', ' ', '"', '\\', '\n', '\t', '\r', ',', ']', '[', '=', 'α', '§', '\u{1}', '😀', '#',
    ];
    (0..rng.random_range(0..12))
        .map(|_| *pool.choose(rng).unwrap())
        .collect()
}

pub fn random_number(rng: &mut impl Rng) -> f64 {
    match rng.random_range(0..6) {
        0 => rng.random_range(-1000..1000) as f64,
        1 => rng.random::<f64>(),
        2 => rng.random_range(-1e6..1e6),
        3 => rng.random::<f64>() * 1e-9,
        4 => rng.random_range(-1e300..1e300),
        _ => rng.random_range(0..3) as f64,
    }
}

pub fn random_reference(rng: &mut impl Rng) -> Reference {
    let ns = *Dimension::ALL.choose(rng).unwrap();
    let mut path = String::new();
    path.push(ALNUM[rng.random_range(0..ALNUM.len())] as char);
    for _ in 0..rng.random_range(0..12) {
        let pool = b"abcdefghijklmnopqrstuvwxyzABC0123456789_-./";
        path.push(*pool.choose(rng).unwrap() as char);
    }
    Reference::new(ns, path).unwrap()
}

pub fn random_value(rng: &mut impl Rng) -> SemanticValue {
    match rng.random_range(0..6) {
        0 => SemanticValue::Identifier(random_identifier(rng)),
        1 => SemanticValue::Text(random_text(rng)),
        2 => SemanticValue::number(random_number(rng)).unwrap(),
        3 => {
            let units = &UnitCode::ALL[..6];
            SemanticValue::quantity(random_number(rng), *units.choose(rng).unwrap()).unwrap()
        }
        4 => {
            let p = match rng.random_range(0..4) {
                0 => 0.0,
                1 => 1.0,
                _ => rng.random::<f64>(),
            };
            SemanticValue::probability(p).unwrap()
        }
        _ => SemanticValue::Reference(random_reference(rng)),
    }
}

pub fn random_block(rng: &mut impl Rng, dim: Dimension) -> ComponentBlock {
    let mut block = ComponentBlock::new(dim);
    let n = rng.random_range(1..6);
    while block.slots.len() < n {
        let key = random_key(rng);
        let value = random_value(rng);
        block.slots.insert(key, value);
    }
    block
}

pub fn random_operator(rng: &mut impl Rng, present: &BTreeSet<Dimension>) -> IntegrationOperator {
    let dims: Vec<Dimension> = present.iter().copied().collect();
    let mut op = IntegrationOperator::default();
    if dims.len() < 2 && rng.random_bool(0.5) {
        return op;
    }
    for _ in 0..rng.random_range(0..5) {
        let candidate = match rng.random_range(0..3) {
            0 | 1 if dims.len() >= 2 => {
                let mut pair = dims.clone();
                pair.shuffle(rng);
                if rng.random_bool(0.6) {
                    IntegrationDirective::Precedence {
                        higher: pair[0],
                        lower: pair[1],
                    }
                } else {
                    IntegrationDirective::Parallel(pair[0], pair[1])
                }
            }
            _ => {
                if op.blend().is_some() {
                    continue;
                }
                let listed: Vec<Dimension> = dims.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
                if listed.is_empty() {
                    continue;
                }
                let raw: Vec<f64> = listed.iter().map(|_| rng.random_range(0..100) as f64).collect();
                let total: f64 = raw.iter().sum::<f64>().max(1.0);
                let scale = if listed.len() == dims.len() {
                    1.0
                } else {
                    rng.random::<f64>()
                };
                let mut w: BTreeMap<Dimension, f64> =
                    listed.iter().zip(&raw).map(|(d, x)| (*d, x / total * scale)).collect();
                if listed.len() == dims.len() {
                    let sum: f64 = w.values().sum();
                    if sum == 0.0 {
                        continue;
                    }
                    w.values_mut().for_each(|x| *x /= sum);
                }
                IntegrationDirective::Blend(w)
            }
        };
        op.directives.push(candidate);
        if op.validate(present).is_err() {
            op.directives.pop();
        }
    }
    op
}

/// A random statement that satisfies every AST invariant.
pub fn random_statement(rng: &mut impl Rng) -> Cyberstatement {
    let mut present: BTreeSet<Dimension> = Dimension::ALL.into_iter().filter(|_| rng.random_bool(0.6)).collect();
    if present.is_empty() {
        present.insert(*Dimension::ALL.choose(rng).unwrap());
    }
    let blocks = present.iter().map(|&d| (d, random_block(rng, d))).collect();
    let omega = random_operator(rng, &present);
    let stmt = Cyberstatement {
        blocks,
        omega,
        statement_id: format!("gen-{}", rng.random::<u64>()),
    };
    stmt.validate().expect("generator produces valid statements");
    stmt
}

/// Source text of the emergency-response worked example, as written with
/// Unicode operators and a Greek letter.
pub const WORKED_EXAMPLE: &str = "[P: sector=A7, altitude=50m, duration=1800s]\n\
[S: authorisation=α, mission-id=SAR-2026-047]\n\
[T: intent=reconnaissance, confidence=0.92, urgency=high]\n\
[C: algorithm=path-optimize-v3, datasource=live-weather-api]\n\
[⊕Ω: P≻S, T∥C]";

pub const WORKED_EXAMPLE_CANONICAL: &str = "[P: sector=A7, altitude=50m, duration=1800s] \
[S: authorisation=alpha, mission-id=SAR-2026-047] \
[T: intent=reconnaissance, confidence=0.92, urgency=high] \
[C: algorithm=path-optimize-v3, datasource=live-weather-api] [+O: P>S, T||C]";
