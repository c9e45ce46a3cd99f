use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;

use crate::cybersign::{Dimension, SemanticValue};

/// Tolerance for blend weights summing to one.
pub const BLEND_TOLERANCE: f64 = 1e-9;

/// One `[D: key=value, ...]` block. Slot order is insertion order and is
/// significant for equality and printing.
#[derive(Debug, Clone)]
pub struct ComponentBlock {
    pub dimension: Dimension,
    pub slots: IndexMap<String, SemanticValue>,
}

impl ComponentBlock {
    pub fn new(dimension: Dimension) -> ComponentBlock {
        ComponentBlock {
            dimension,
            slots: IndexMap::new(),
        }
    }

    pub fn with_slot(mut self, key: &str, value: SemanticValue) -> ComponentBlock {
        self.slots.insert(key.to_string(), value);
        self
    }

    pub fn get(&self, key: &str) -> Option<&SemanticValue> {
        self.slots.get(key)
    }
}

impl PartialEq for ComponentBlock {
    fn eq(&self, other: &Self) -> bool {
        self.dimension == other.dimension && self.slots.iter().eq(other.slots.iter())
    }
}

/// Slot keys: `[a-z][a-z0-9-]*`.
pub fn is_slot_key(key: &str) -> bool {
    let mut chars = key.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-')
}

#[derive(Debug, Clone, PartialEq)]
pub enum IntegrationDirective {
    Precedence { higher: Dimension, lower: Dimension },
    Parallel(Dimension, Dimension),
    Blend(BTreeMap<Dimension, f64>),
}

impl IntegrationDirective {
    pub fn dimensions(&self) -> Vec<Dimension> {
        match self {
            IntegrationDirective::Precedence { higher, lower } => vec![*higher, *lower],
            IntegrationDirective::Parallel(a, b) => vec![*a, *b],
            IntegrationDirective::Blend(w) => w.keys().copied().collect(),
        }
    }
}

/// The trailing `[+O: ...]` block. An empty operator is legal.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntegrationOperator {
    pub directives: Vec<IntegrationDirective>,
}

impl IntegrationOperator {
    pub fn new(directives: Vec<IntegrationDirective>) -> IntegrationOperator {
        IntegrationOperator { directives }
    }

    pub fn is_empty(&self) -> bool {
        self.directives.is_empty()
    }

    /// The single merged blend map, if any.
    pub fn blend(&self) -> Option<&BTreeMap<Dimension, f64>> {
        self.directives.iter().find_map(|d| match d {
            IntegrationDirective::Blend(w) => Some(w),
            _ => None,
        })
    }

    /// Checks every operator invariant against the set of dimensions the
    /// statement actually carries.
    pub fn validate(&self, present: &BTreeSet<Dimension>) -> Result<(), OmegaViolation> {
        let mut blends = 0;
        for d in &self.directives {
            match d {
                IntegrationDirective::Precedence { higher: a, lower: b } | IntegrationDirective::Parallel(a, b)
                    if a == b =>
                {
                    return Err(OmegaViolation::Degenerate(*a));
                }
                IntegrationDirective::Blend(w) => {
                    blends += 1;
                    if w.is_empty() {
                        return Err(OmegaViolation::InvalidBlend("empty blend".into()));
                    }
                }
                _ => {}
            }
            if let Some(missing) = d.dimensions().into_iter().find(|x| !present.contains(x)) {
                return Err(OmegaViolation::AbsentDimension(missing));
            }
        }
        if blends > 1 {
            return Err(OmegaViolation::InvalidBlend("more than one blend directive".into()));
        }
        if let Some(w) = self.blend() {
            check_blend(w, present)?;
        }
        let order = super::DimensionOrder::new(&self.directives, present).map_err(|e| match e {
            super::OrderError::Contradictory(a, b) => OmegaViolation::Contradictory(a, b),
            super::OrderError::Cyclic(c) => OmegaViolation::Cyclic(c),
        })?;
        if let Some(w) = self.blend_weights(present) {
            check_blend_order(&w, &order)?;
        }
        Ok(())
    }

    /// The blend completed over `present`: listed weights are kept, the
    /// remaining mass is shared uniformly by the unlisted dimensions.
    pub fn blend_weights(&self, present: &BTreeSet<Dimension>) -> Option<BTreeMap<Dimension, f64>> {
        let listed = self.blend()?;
        let rest: Vec<Dimension> = present.iter().copied().filter(|d| !listed.contains_key(d)).collect();
        let remaining = (1.0 - listed.values().sum::<f64>()).max(0.0);
        let mut out: BTreeMap<Dimension, f64> = listed
            .iter()
            .filter(|(d, _)| present.contains(d))
            .map(|(d, w)| (*d, *w))
            .collect();
        for d in &rest {
            out.insert(*d, remaining / rest.len() as f64);
        }
        Some(out)
    }
}

/// Parallel dimensions must share a weight; a preceding dimension must weigh
/// strictly more.
fn check_blend_order(w: &BTreeMap<Dimension, f64>, order: &super::DimensionOrder) -> Result<(), OmegaViolation> {
    for (&a, &wa) in w {
        for (&b, &wb) in w {
            if order.parallel(a, b) && (wa - wb).abs() > BLEND_TOLERANCE {
                return Err(OmegaViolation::InvalidBlend(format!(
                    "{a} and {b} are parallel but weigh {wa} and {wb}"
                )));
            }
            if order.precedes(a, b) && wa <= wb + BLEND_TOLERANCE {
                return Err(OmegaViolation::InvalidBlend(format!(
                    "{a} precedes {b} but weighs {wa}, not more than {wb}"
                )));
            }
        }
    }
    Ok(())
}

fn check_blend(w: &BTreeMap<Dimension, f64>, present: &BTreeSet<Dimension>) -> Result<(), OmegaViolation> {
    if let Some((d, x)) = w.iter().find(|(_, x)| !x.is_finite() || **x < 0.0) {
        return Err(OmegaViolation::InvalidBlend(format!("negative weight {x} for {d}")));
    }
    let total: f64 = w.values().sum();
    if total > 1.0 + BLEND_TOLERANCE {
        return Err(OmegaViolation::InvalidBlend(format!("weights sum to {total} > 1")));
    }
    if w.len() == present.len() && (total - 1.0).abs() > BLEND_TOLERANCE {
        return Err(OmegaViolation::InvalidBlend(format!(
            "weights over all present dimensions sum to {total}, not 1"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum OmegaViolation {
    Degenerate(Dimension),
    AbsentDimension(Dimension),
    Contradictory(Dimension, Dimension),
    Cyclic(Vec<Dimension>),
    InvalidBlend(String),
}

/// A parsed utterance: up to one block per dimension plus the integration
/// operator.
#[derive(Debug, Clone)]
pub struct Cyberstatement {
    pub blocks: BTreeMap<Dimension, ComponentBlock>,
    pub omega: IntegrationOperator,
    pub statement_id: String,
}

impl Cyberstatement {
    pub fn present(&self) -> BTreeSet<Dimension> {
        self.blocks.keys().copied().collect()
    }

    /// The block for `dim`, or `None` when the statement leaves it unspecified.
    pub fn project(&self, dim: Dimension) -> Option<&ComponentBlock> {
        self.blocks.get(&dim)
    }

    pub fn slot(&self, dim: Dimension, key: &str) -> Option<&SemanticValue> {
        self.blocks.get(&dim).and_then(|b| b.get(key))
    }

    /// All slots in canonical order (P, S, T, C; insertion order within).
    pub fn slots(&self) -> impl Iterator<Item = (Dimension, &str, &SemanticValue)> {
        self.blocks
            .values()
            .flat_map(|b| b.slots.iter().map(move |(k, v)| (b.dimension, k.as_str(), v)))
    }

    /// Equality ignoring `statement_id`.
    pub fn same_structure(&self, other: &Cyberstatement) -> bool {
        self.blocks == other.blocks && self.omega == other.omega
    }

    /// Re-checks the invariants the parser enforces; for hand-built statements.
    pub fn validate(&self) -> Result<(), String> {
        if self.blocks.is_empty() {
            return Err("statement has no dimension blocks".into());
        }
        for (d, b) in &self.blocks {
            if b.dimension != *d {
                return Err(format!("block stored under {d} claims {}", b.dimension));
            }
            if b.slots.is_empty() {
                return Err(format!("{d} block has no slots"));
            }
            for (k, v) in &b.slots {
                if !is_slot_key(k) {
                    return Err(format!("invalid slot key `{k}`"));
                }
                v.validate().map_err(|e| format!("{d}.{k}: {e}"))?;
            }
        }
        self.omega
            .validate(&self.present())
            .map_err(|e| format!("integration operator: {e:?}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slot_keys() {
        assert!(is_slot_key("mission-id"));
        assert!(is_slot_key("a1"));
        assert!(!is_slot_key("Mission"));
        assert!(!is_slot_key("1a"));
        assert!(!is_slot_key(""));
        assert!(!is_slot_key("a_b"));
    }

    #[test]
    fn block_equality_is_order_sensitive() {
        let one = SemanticValue::Number(1.0);
        let two = SemanticValue::Number(2.0);
        let a = ComponentBlock::new(Dimension::P)
            .with_slot("a", one.clone())
            .with_slot("b", two.clone());
        let b = ComponentBlock::new(Dimension::P)
            .with_slot("b", two)
            .with_slot("a", one);
        assert_ne!(a, b);
    }

    #[test]
    fn blend_rules() {
        let present: BTreeSet<_> = [Dimension::P, Dimension::C].into_iter().collect();
        let ok = IntegrationOperator::new(vec![IntegrationDirective::Blend(
            [(Dimension::P, 0.7)].into_iter().collect(),
        )]);
        assert!(ok.validate(&present).is_ok());
        let full_short = IntegrationOperator::new(vec![IntegrationDirective::Blend(
            [(Dimension::P, 0.7), (Dimension::C, 0.2)].into_iter().collect(),
        )]);
        assert!(matches!(
            full_short.validate(&present),
            Err(OmegaViolation::InvalidBlend(_))
        ));
        let over = IntegrationOperator::new(vec![IntegrationDirective::Blend(
            [(Dimension::P, 1.2)].into_iter().collect(),
        )]);
        assert!(matches!(over.validate(&present), Err(OmegaViolation::InvalidBlend(_))));
        let completed = ok.blend_weights(&present).unwrap();
        assert!((completed[&Dimension::C] - 0.3).abs() < 1e-12);
        let against_precedence = IntegrationOperator::new(vec![
            IntegrationDirective::Precedence {
                higher: Dimension::C,
                lower: Dimension::P,
            },
            IntegrationDirective::Blend([(Dimension::P, 0.7)].into_iter().collect()),
        ]);
        assert!(matches!(
            against_precedence.validate(&present),
            Err(OmegaViolation::InvalidBlend(_))
        ));
        let against_parallel = IntegrationOperator::new(vec![
            IntegrationDirective::Parallel(Dimension::C, Dimension::P),
            IntegrationDirective::Blend([(Dimension::P, 0.5)].into_iter().collect()),
        ]);
        assert!(against_parallel.validate(&present).is_ok());
        let absent = IntegrationOperator::new(vec![IntegrationDirective::Parallel(Dimension::P, Dimension::S)]);
        assert_eq!(
            absent.validate(&present),
            Err(OmegaViolation::AbsentDimension(Dimension::S))
        );
    }
}
