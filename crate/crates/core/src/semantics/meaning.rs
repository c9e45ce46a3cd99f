use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::Serialize;

use crate::cybersign::{Cybersign, Dimension, SemanticValue, SignRegistry};
use crate::digest::json_digest;
use crate::fdsg::{Cyberstatement, DimensionOrder};

use super::context::ContextSnapshot;
use super::disambiguate::{disambiguate_with_prior, Disambiguation};
use super::mapping::MappingRegistry;
use super::weights::{derive_weights, DimensionWeights};
use super::{AmbiguityError, MeaningError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Expression,
    Context,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedSlot {
    pub value: SemanticValue,
    pub origin: Origin,
}

/// A key given both by the expression and by the context, with different
/// values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conflict {
    pub dimension: Dimension,
    pub key: String,
    pub expression_value: SemanticValue,
    pub context_value: SemanticValue,
    pub winner: Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedMeaning {
    pub statement_id: String,
    /// Expression slots in statement order, then context fill-ins by key.
    pub resolved: BTreeMap<Dimension, IndexMap<String, ResolvedSlot>>,
    pub weights: DimensionWeights,
    pub conflicts: Vec<Conflict>,
    pub sign_bindings: BTreeMap<String, Cybersign>,
}

impl ResolvedMeaning {
    pub fn value(&self, d: Dimension, key: &str) -> Option<&SemanticValue> {
        self.resolved.get(&d)?.get(key).map(|s| &s.value)
    }

    /// SHA-256 of the key-sorted JSON form.
    pub fn digest(&self) -> String {
        json_digest(&serde_json::to_value(self).expect("serializable"))
    }
}

/// Everything a strategy may consult when combining expression and context.
pub struct IntegrationInput<'a> {
    pub stmt: &'a Cyberstatement,
    pub ctx: &'a ContextSnapshot,
    pub order: &'a DimensionOrder,
    pub weights: &'a DimensionWeights,
    pub registry: &'a MappingRegistry,
}

pub struct Integration {
    pub resolved: BTreeMap<Dimension, IndexMap<String, ResolvedSlot>>,
    pub conflicts: Vec<Conflict>,
}

/// How expression and context are combined. [`Overlay`] is the default.
pub trait IntegrationStrategy {
    fn integrate(&self, input: &IntegrationInput<'_>) -> Integration;

    /// Tie-break bias for a sense of `lambda`. Only consulted between senses
    /// whose context scores are equal.
    fn sign_prior(&self, _lambda: &str, _candidate: &Cybersign, _ctx: &ContextSnapshot) -> f64 {
        0.0
    }
}

/// Expression slots win, except that an authoritative context slot wins in a
/// dimension nothing outranks. Context-only keys are filled in.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overlay;

impl IntegrationStrategy for Overlay {
    fn integrate(&self, input: &IntegrationInput<'_>) -> Integration {
        let mut resolved = BTreeMap::new();
        let mut conflicts = Vec::new();
        for d in Dimension::ALL {
            let state = input.ctx.state(d);
            let mut slots: IndexMap<String, ResolvedSlot> = IndexMap::new();
            if let Some(block) = input.stmt.project(d) {
                for (key, value) in &block.slots {
                    let mut slot = ResolvedSlot {
                        value: value.clone(),
                        origin: Origin::Expression,
                    };
                    if let Some(c) = state.get(key).filter(|c| c.value != *value) {
                        let context_wins = c.authoritative && input.order.is_top(d);
                        if context_wins {
                            slot = ResolvedSlot {
                                value: c.value.clone(),
                                origin: Origin::Context,
                            };
                        }
                        conflicts.push(Conflict {
                            dimension: d,
                            key: key.clone(),
                            expression_value: value.clone(),
                            context_value: c.value.clone(),
                            winner: slot.origin,
                        });
                    }
                    slots.insert(key.clone(), slot);
                }
            }
            for (key, c) in state {
                if !slots.contains_key(key) {
                    slots.insert(
                        key.clone(),
                        ResolvedSlot {
                            value: c.value.clone(),
                            origin: Origin::Context,
                        },
                    );
                }
            }
            if !slots.is_empty() {
                resolved.insert(d, slots);
            }
        }
        Integration { resolved, conflicts }
    }
}

/// Meaning of `stmt` in `ctx`: weights from the operator, expression and
/// context combined by `strategy`, and every identifier with registered
/// senses bound to one sign.
pub fn evaluate_meaning(
    stmt: &Cyberstatement,
    ctx: &ContextSnapshot,
    signs: &SignRegistry,
    registry: &MappingRegistry,
    strategy: &dyn IntegrationStrategy,
) -> Result<ResolvedMeaning, MeaningError> {
    stmt.validate().map_err(MeaningError::InvalidStatement)?;
    ctx.validate()?;
    let present = stmt.present();
    let weights = derive_weights(&stmt.omega, &present)?;
    let order = DimensionOrder::new(&stmt.omega.directives, &present)
        .map_err(|e| MeaningError::InconsistentDirectives(format!("{e:?}")))?;
    let Integration { resolved, conflicts } = strategy.integrate(&IntegrationInput {
        stmt,
        ctx,
        order: &order,
        weights: &weights,
        registry,
    });

    let mut sign_bindings = BTreeMap::new();
    for (&d, slots) in &resolved {
        for (key, slot) in slots {
            let (Origin::Expression, SemanticValue::Identifier(lambda)) = (slot.origin, &slot.value) else {
                continue;
            };
            let senses = signs.lookup(lambda);
            if senses.is_empty() || sign_bindings.contains_key(lambda) {
                continue;
            }
            let prior = |c: &Cybersign| strategy.sign_prior(lambda, c, ctx);
            match disambiguate_with_prior(lambda, senses, ctx, &weights, prior) {
                Disambiguation::Chosen(sign) => {
                    sign_bindings.insert(lambda.clone(), sign);
                }
                Disambiguation::Tie(candidates) => {
                    return Err(MeaningError::Ambiguity(AmbiguityError {
                        dimension: d,
                        key: key.clone(),
                        lambda: lambda.clone(),
                        candidates,
                    }))
                }
            }
        }
    }

    Ok(ResolvedMeaning {
        statement_id: stmt.statement_id.clone(),
        resolved,
        weights,
        conflicts,
        sign_bindings,
    })
}
