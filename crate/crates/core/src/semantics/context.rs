use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{Map, Value};

use crate::cybersign::{Dimension, Reference, SemanticValue};
use crate::fdsg::is_slot_key;

use super::MeaningError;

/// One context entry. Authoritative slots may override expression slots.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextSlot {
    pub value: SemanticValue,
    pub authoritative: bool,
}

/// Timestamped state of all four dimensions. Immutable once built; updates
/// are new snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextSnapshot {
    pub timestamp: i64,
    states: BTreeMap<Dimension, BTreeMap<String, ContextSlot>>,
}

impl Default for ContextSnapshot {
    fn default() -> Self {
        ContextSnapshot::empty(0)
    }
}

impl ContextSnapshot {
    pub fn empty(timestamp: i64) -> ContextSnapshot {
        ContextSnapshot {
            timestamp,
            states: Dimension::ALL.into_iter().map(|d| (d, BTreeMap::new())).collect(),
        }
    }

    pub fn with(
        mut self,
        dimension: Dimension,
        key: &str,
        value: SemanticValue,
        authoritative: bool,
    ) -> ContextSnapshot {
        self.states
            .get_mut(&dimension)
            .expect("all dimensions present")
            .insert(key.to_string(), ContextSlot { value, authoritative });
        self
    }

    pub fn state(&self, dimension: Dimension) -> &BTreeMap<String, ContextSlot> {
        &self.states[&dimension]
    }

    pub fn is_empty(&self) -> bool {
        self.states.values().all(BTreeMap::is_empty)
    }

    /// Whether `reference` occurs as a value anywhere in `dimension`'s state.
    pub fn mentions(&self, dimension: Dimension, reference: &Reference) -> bool {
        self.state(dimension)
            .values()
            .any(|s| matches!(&s.value, SemanticValue::Reference(r) if r == reference))
    }

    pub fn validate(&self) -> Result<(), MeaningError> {
        for (d, state) in &self.states {
            for (k, slot) in state {
                if !is_slot_key(k) {
                    return Err(MeaningError::InvalidContext(format!("{d}: invalid key `{k}`")));
                }
                slot.value
                    .validate()
                    .map_err(|e| MeaningError::InvalidContext(format!("{d}.{k}: {e}")))?;
            }
        }
        Ok(())
    }

    /// Parses `{timestamp, P:{..}, S:{..}, T:{..}, C:{..}}`. Values are
    /// canonical value strings; a key ending in `!` is authoritative.
    pub fn from_json(text: &str) -> Result<ContextSnapshot, MeaningError> {
        let root: Value = crate::json::parse_strict(text).map_err(|e| MeaningError::InvalidContext(e.to_string()))?;
        let Value::Object(root) = root else {
            return Err(MeaningError::InvalidContext("context must be a JSON object".into()));
        };
        let mut ctx = ContextSnapshot::empty(0);
        for (field, v) in root {
            if field == "timestamp" {
                ctx.timestamp = v
                    .as_i64()
                    .ok_or_else(|| MeaningError::InvalidContext("timestamp must be an integer".into()))?;
                continue;
            }
            let dim: Dimension = field
                .parse()
                .map_err(|_| MeaningError::InvalidContext(format!("unknown field `{field}`")))?;
            let Value::Object(slots) = v else {
                return Err(MeaningError::InvalidContext(format!("{dim} state must be an object")));
            };
            for (raw_key, raw) in slots {
                let (key, authoritative) = match raw_key.strip_suffix('!') {
                    Some(k) => (k.to_string(), true),
                    None => (raw_key.clone(), false),
                };
                let Value::String(s) = raw else {
                    return Err(MeaningError::InvalidContext(format!(
                        "{dim}.{key}: value must be a string"
                    )));
                };
                let value =
                    SemanticValue::parse(&s).map_err(|e| MeaningError::InvalidContext(format!("{dim}.{key}: {e}")))?;
                if ctx.states[&dim].contains_key(&key) {
                    return Err(MeaningError::InvalidContext(format!("{dim}.{key} given twice")));
                }
                ctx = ctx.with(dim, &key, value, authoritative);
            }
        }
        ctx.validate()?;
        Ok(ctx)
    }

    pub fn to_json(&self) -> String {
        let mut root = Map::new();
        root.insert("timestamp".into(), Value::from(self.timestamp));
        for (d, state) in &self.states {
            let slots: Map<String, Value> = state
                .iter()
                .map(|(k, s)| {
                    let key = if s.authoritative { format!("{k}!") } else { k.clone() };
                    (key, Value::String(s.value.canonical()))
                })
                .collect();
            root.insert(d.to_string(), Value::Object(slots));
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(root)).expect("serializable");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ContextSnapshot, MeaningError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| MeaningError::InvalidContext(format!("{}: {e}", path.as_ref().display())))?;
        ContextSnapshot::from_json(&text)
    }
}
