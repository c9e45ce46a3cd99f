//! The machine-json document: the one lossless target.
//!
//! ```json
//! {"statement_id": "..", "P": {"sector": "A7"}, "omega": [["prec","P","S"]], "order": {"P": ["sector"]}}
//! ```
//!
//! Values are canonical value prints. `order` keeps the slot order of each
//! block, which the key-sorted objects lose.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde_json::{Map, Value};

use crate::cybersign::{Dimension, SemanticValue};
use crate::fdsg::{is_slot_key, ComponentBlock, Cyberstatement, IntegrationDirective, IntegrationOperator};

use super::SchemaViolation;

pub const MACHINE_JSON_SCHEMA: &str = include_str!("../../data/machine-json.schema.json");

pub fn directive_json(d: &IntegrationDirective) -> Value {
    match d {
        IntegrationDirective::Precedence { higher, lower } => {
            serde_json::json!(["prec", higher.to_string(), lower.to_string()])
        }
        IntegrationDirective::Parallel(a, b) => serde_json::json!(["par", a.to_string(), b.to_string()]),
        IntegrationDirective::Blend(w) => {
            let weights: Map<String, Value> = w.iter().map(|(d, x)| (d.to_string(), Value::from(*x))).collect();
            serde_json::json!(["blend", weights])
        }
    }
}

/// The canonical document for `stmt`.
pub fn machine_json(stmt: &Cyberstatement) -> Value {
    let mut root = Map::new();
    root.insert("statement_id".into(), Value::String(stmt.statement_id.clone()));
    let mut order = Map::new();
    for (d, block) in &stmt.blocks {
        let slots: Map<String, Value> = block
            .slots
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.canonical())))
            .collect();
        root.insert(d.to_string(), Value::Object(slots));
        order.insert(d.to_string(), block.slots.keys().cloned().collect());
    }
    root.insert(
        "omega".into(),
        stmt.omega.directives.iter().map(directive_json).collect(),
    );
    root.insert("order".into(), Value::Object(order));
    Value::Object(root)
}

/// Inverse of [`machine_json`] over JSON text. Duplicate keys anywhere are a
/// violation.
pub fn decompile_machine_json(text: &str) -> Result<Cyberstatement, SchemaViolation> {
    let doc = crate::json::parse_strict(text).map_err(|e| SchemaViolation(e.to_string()))?;
    decompile_value(&doc)
}

fn violation<T>(msg: impl Into<String>) -> Result<T, SchemaViolation> {
    Err(SchemaViolation(msg.into()))
}

fn dimension(v: &Value, at: &str) -> Result<Dimension, SchemaViolation> {
    match v.as_str().and_then(|s| s.parse().ok()) {
        Some(d) => Ok(d),
        None => violation(format!("{at}: expected one of \"P\", \"S\", \"T\", \"C\"")),
    }
}

fn directive(v: &Value, at: &str) -> Result<IntegrationDirective, SchemaViolation> {
    let Some(items) = v.as_array() else {
        return violation(format!("{at}: directive must be an array"));
    };
    match (items.first().and_then(Value::as_str), items.len()) {
        (Some("prec"), 3) => Ok(IntegrationDirective::Precedence {
            higher: dimension(&items[1], at)?,
            lower: dimension(&items[2], at)?,
        }),
        (Some("par"), 3) => Ok(IntegrationDirective::Parallel(
            dimension(&items[1], at)?,
            dimension(&items[2], at)?,
        )),
        (Some("blend"), 2) => {
            let Some(w) = items[1].as_object() else {
                return violation(format!("{at}: blend weights must be an object"));
            };
            let mut weights = BTreeMap::new();
            for (k, x) in w {
                let d = dimension(&Value::String(k.clone()), at)?;
                let Some(x) = x.as_f64() else {
                    return violation(format!("{at}: weight of {d} must be a number"));
                };
                weights.insert(d, x);
            }
            Ok(IntegrationDirective::Blend(weights))
        }
        _ => violation(format!(
            "{at}: expected [\"prec\",D,D], [\"par\",D,D] or [\"blend\",{{..}}]"
        )),
    }
}

/// Inverse of [`machine_json`] over an already parsed document.
pub fn decompile_value(doc: &Value) -> Result<Cyberstatement, SchemaViolation> {
    let Some(root) = doc.as_object() else {
        return violation("document must be an object");
    };
    for field in root.keys() {
        if !matches!(
            field.as_str(),
            "statement_id" | "omega" | "order" | "P" | "S" | "T" | "C"
        ) {
            return violation(format!("unknown field `{field}`"));
        }
    }
    let statement_id = match root.get("statement_id") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        _ => return violation("statement_id must be a non-empty string"),
    };

    let order = match root.get("order") {
        None => Map::new(),
        Some(Value::Object(o)) => o.clone(),
        Some(_) => return violation("order must be an object"),
    };
    let mut blocks = BTreeMap::new();
    for d in Dimension::ALL {
        let name = d.to_string();
        let Some(raw) = root.get(&name) else {
            if order.contains_key(&name) {
                return violation(format!("order names absent block {name}"));
            }
            continue;
        };
        let Some(slots) = raw.as_object() else {
            return violation(format!("{name} must be an object"));
        };
        if slots.is_empty() {
            return violation(format!("{name} has no slots"));
        }
        let keys: Vec<String> = match order.get(&name) {
            None => slots.keys().cloned().collect(),
            Some(Value::Array(ks)) => {
                let ks: Option<Vec<String>> = ks.iter().map(|k| k.as_str().map(str::to_string)).collect();
                let Some(ks) = ks else {
                    return violation(format!("order.{name} must list strings"));
                };
                let mut sorted = ks.clone();
                sorted.sort();
                sorted.dedup();
                if sorted.len() != ks.len() || !sorted.iter().eq(slots.keys()) {
                    return violation(format!("order.{name} must list each {name} key exactly once"));
                }
                ks
            }
            Some(_) => return violation(format!("order.{name} must be an array")),
        };
        let mut block = IndexMap::new();
        for k in keys {
            if !is_slot_key(&k) {
                return violation(format!("{name}: invalid slot key `{k}`"));
            }
            let Some(text) = slots[&k].as_str() else {
                return violation(format!("{name}.{k} must be a string"));
            };
            let value = SemanticValue::parse(text).map_err(|e| SchemaViolation(format!("{name}.{k}: {e}")))?;
            block.insert(k, value);
        }
        blocks.insert(
            d,
            ComponentBlock {
                dimension: d,
                slots: block,
            },
        );
    }

    let directives = match root.get("omega") {
        None => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(i, v)| directive(v, &format!("omega[{i}]")))
            .collect::<Result<_, _>>()?,
        Some(_) => return violation("omega must be an array"),
    };

    let stmt = Cyberstatement {
        blocks,
        omega: IntegrationOperator::new(directives),
        statement_id,
    };
    stmt.validate().map_err(SchemaViolation)?;
    Ok(stmt)
}
