use crate::cybersign::{Cybersign, Dimension};
use crate::fdsg::BLEND_TOLERANCE;

use super::context::ContextSnapshot;
use super::weights::DimensionWeights;

#[derive(Debug, Clone, PartialEq)]
pub enum Disambiguation {
    Chosen(Cybersign),
    /// Every candidate sharing the top score, in input order.
    Tie(Vec<Cybersign>),
}

/// `sum_d weight[d] * match_d`, where `match_d` is 1 when the candidate's
/// `d` signified occurs as a value in the context's `d` state.
pub fn score(candidate: &Cybersign, ctx: &ContextSnapshot, weights: &DimensionWeights) -> f64 {
    Dimension::ALL
        .into_iter()
        .filter(|&d| ctx.mentions(d, &candidate.dyad(d).signified))
        .map(|d| weights.get(d))
        .sum()
}

/// Picks the unique best-scoring sense of `lambda`, or reports the tie.
pub fn disambiguate(
    lambda: &str,
    candidates: &[Cybersign],
    ctx: &ContextSnapshot,
    weights: &DimensionWeights,
) -> Disambiguation {
    disambiguate_with_prior(lambda, candidates, ctx, weights, |_| 0.0)
}

/// As [`disambiguate`], but a tie on score is broken by the highest `prior`
/// when that prior is unique. Priors never outweigh a score difference.
pub fn disambiguate_with_prior(
    lambda: &str,
    candidates: &[Cybersign],
    ctx: &ContextSnapshot,
    weights: &DimensionWeights,
    prior: impl Fn(&Cybersign) -> f64,
) -> Disambiguation {
    assert!(!candidates.is_empty(), "disambiguate needs at least one candidate");
    debug_assert!(candidates.iter().all(|c| c.lambda() == lambda));
    let scores: Vec<f64> = candidates.iter().map(|c| score(c, ctx, weights)).collect();
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let top: Vec<&Cybersign> = candidates
        .iter()
        .zip(&scores)
        .filter(|(_, s)| best - **s <= BLEND_TOLERANCE)
        .map(|(c, _)| c)
        .collect();
    if let [only] = top[..] {
        return Disambiguation::Chosen(only.clone());
    }
    let priors: Vec<f64> = top.iter().map(|c| prior(c)).collect();
    let best_prior = priors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let leaders: Vec<&Cybersign> = top
        .iter()
        .zip(&priors)
        .filter(|(_, p)| best_prior - **p <= BLEND_TOLERANCE)
        .map(|(c, _)| *c)
        .collect();
    match leaders[..] {
        [only] => Disambiguation::Chosen(only.clone()),
        _ => Disambiguation::Tie(top.into_iter().cloned().collect()),
    }
}
