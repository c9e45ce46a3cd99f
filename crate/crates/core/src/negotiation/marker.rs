use crate::semantics::{Conflict, Origin, ResolvedMeaning, ResolvedSlot};

use super::message::MetaMarker;
use super::NegotiationError;

/// Re-reads one dimension of a resolved meaning as the marker says. Values
/// it displaces are kept as conflicts; other dimensions are untouched.
pub fn apply_meta_marker(meaning: &ResolvedMeaning, marker: &MetaMarker) -> Result<ResolvedMeaning, NegotiationError> {
    if marker.target_statement_id != meaning.statement_id {
        return Err(NegotiationError::UnknownStatement(marker.target_statement_id.clone()));
    }
    let mut out = meaning.clone();
    if marker.overrides.is_empty() {
        return Ok(out);
    }
    let slots = out.resolved.entry(marker.dimension).or_default();
    for (key, value) in &marker.overrides {
        let previous = slots.insert(
            key.clone(),
            ResolvedSlot {
                value: value.clone(),
                origin: Origin::Context,
            },
        );
        if let Some(old) = previous.filter(|old| old.value != *value) {
            out.conflicts.push(Conflict {
                dimension: marker.dimension,
                key: key.clone(),
                expression_value: old.value,
                context_value: value.clone(),
                winner: Origin::Context,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cybersign::{Dimension, SemanticValue, SignRegistry};
    use crate::fdsg::parse;
    use crate::semantics::{evaluate_meaning, ContextSnapshot, MappingRegistry, Overlay};

    fn meaning() -> ResolvedMeaning {
        let stmt = parse("[P: sector=A7] [T: intent=reconnaissance, confidence=0.92]").unwrap();
        evaluate_meaning(
            &stmt,
            &ContextSnapshot::empty(0),
            &SignRegistry::new(),
            &MappingRegistry::new(),
            &Overlay,
        )
        .unwrap()
    }

    fn marker(m: &ResolvedMeaning, dimension: Dimension, pairs: &[(&str, &str)]) -> MetaMarker {
        MetaMarker {
            target_statement_id: m.statement_id.clone(),
            dimension,
            overrides: pairs
                .iter()
                .map(|(k, v)| (k.to_string(), SemanticValue::parse(v).unwrap()))
                .collect(),
        }
    }

    #[test]
    fn clarification_marker() {
        let m = meaning();
        let out = apply_meta_marker(
            &m,
            &marker(&m, Dimension::T, &[("intent", "clarification"), ("confidence", "0.6")]),
        )
        .unwrap();
        assert_eq!(
            out.value(Dimension::T, "intent"),
            Some(&SemanticValue::identifier("clarification").unwrap())
        );
        assert_eq!(
            out.value(Dimension::T, "confidence"),
            Some(&SemanticValue::Probability(0.6))
        );
        assert_eq!(out.conflicts.len(), 2);
        assert_eq!(out.resolved[&Dimension::P], m.resolved[&Dimension::P]);
    }

    #[test]
    fn empty_and_additive_markers() {
        let m = meaning();
        assert_eq!(apply_meta_marker(&m, &marker(&m, Dimension::T, &[])).unwrap(), m);
        let out = apply_meta_marker(&m, &marker(&m, Dimension::S, &[("role", "medic")])).unwrap();
        assert_eq!(out.resolved[&Dimension::S].len(), 1);
        assert!(out.conflicts.is_empty());
    }

    #[test]
    fn unknown_statement() {
        let m = meaning();
        let mut k = marker(&m, Dimension::T, &[]);
        k.target_statement_id = "other".into();
        assert!(matches!(
            apply_meta_marker(&m, &k),
            Err(NegotiationError::UnknownStatement(_))
        ));
    }
}
