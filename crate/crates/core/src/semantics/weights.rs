use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::cybersign::Dimension;
use crate::fdsg::{DimensionOrder, IntegrationOperator, BLEND_TOLERANCE};

use super::MeaningError;

/// Per-dimension contribution weights. Dimensions absent from the statement
/// weigh zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DimensionWeights {
    weights: BTreeMap<Dimension, f64>,
}

impl DimensionWeights {
    pub fn new(weights: BTreeMap<Dimension, f64>) -> DimensionWeights {
        DimensionWeights { weights }
    }

    pub fn uniform(present: &BTreeSet<Dimension>) -> DimensionWeights {
        let w = 1.0 / present.len() as f64;
        DimensionWeights::new(present.iter().map(|&d| (d, w)).collect())
    }

    pub fn get(&self, d: Dimension) -> f64 {
        self.weights.get(&d).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Dimension, f64)> + '_ {
        self.weights.iter().map(|(d, w)| (*d, *w))
    }

    pub fn sum(&self) -> f64 {
        self.weights.values().sum()
    }

    /// Multiplies every weight by `k`; the result is no longer normalized.
    pub fn scaled(&self, k: f64) -> DimensionWeights {
        DimensionWeights::new(self.weights.iter().map(|(d, w)| (*d, w * k)).collect())
    }
}

/// Weights implied by an integration operator.
///
/// A blend fixes the listed weights and shares the remaining mass uniformly.
/// Without one, each present dimension scores `|present| + #below - #above`
/// under the precedence order and scores are normalized, so parallel
/// dimensions tie and a preceding dimension always weighs strictly more.
pub fn derive_weights(
    omega: &IntegrationOperator,
    present: &BTreeSet<Dimension>,
) -> Result<DimensionWeights, MeaningError> {
    if present.is_empty() {
        return Err(MeaningError::InconsistentDirectives("no dimensions present".into()));
    }
    omega
        .validate(present)
        .map_err(|e| MeaningError::InconsistentDirectives(format!("{e:?}")))?;
    let order = DimensionOrder::new(&omega.directives, present)
        .map_err(|e| MeaningError::InconsistentDirectives(format!("{e:?}")))?;

    let weights = match omega.blend_weights(present) {
        Some(w) => w,
        None => {
            let scores: BTreeMap<Dimension, f64> = present.iter().map(|&d| (d, order.rank_score(d) as f64)).collect();
            let total: f64 = scores.values().sum();
            scores.into_iter().map(|(d, s)| (d, s / total)).collect()
        }
    };

    for &a in present {
        for &b in present {
            let (wa, wb) = (weights[&a], weights[&b]);
            if order.parallel(a, b) && (wa - wb).abs() > BLEND_TOLERANCE {
                return Err(MeaningError::InconsistentDirectives(format!(
                    "{a}||{b} but weights differ"
                )));
            }
            if order.precedes(a, b) && wa <= wb {
                return Err(MeaningError::InconsistentDirectives(format!(
                    "{a}>{b} but {a} does not weigh more"
                )));
            }
        }
    }
    Ok(DimensionWeights::new(weights))
}
