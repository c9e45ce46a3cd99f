use std::cmp::Reverse;

use serde_json::{json, Value};

use crate::fdsg::{Cyberstatement, DimensionOrder};

use super::dialect::Dialect;
use super::{CompileError, TargetProfile};

/// Stands in for the delivery time in twin updates.
pub const TS_PLACEHOLDER: &str = "$ts";

pub(super) fn human_nl(stmt: &Cyberstatement, dialect: &Dialect) -> Result<Value, CompileError> {
    dialect
        .nl_templates
        .iter()
        .filter(|t| t.requires.iter().all(|s| s.lookup(stmt).is_some()))
        .find_map(|t| t.template.render(stmt))
        .map(Value::String)
        .ok_or(CompileError::NoApplicableTemplate)
}

/// Applicable rules, highest-ranked dimension first. When the commands of
/// one parallel class come from more than one dimension they share a
/// concurrency group; otherwise every command runs in a group of its own.
pub(super) fn robot_cmd(stmt: &Cyberstatement, dialect: &Dialect) -> Result<Value, CompileError> {
    let order = DimensionOrder::new(&stmt.omega.directives, &stmt.present())
        .map_err(|e| CompileError::InvalidOmega(format!("{e:?}")))?;
    let mut applicable: Vec<(usize, &super::dialect::RobotRule)> = dialect
        .robot_rules
        .iter()
        .enumerate()
        .filter(|(_, r)| r.requires.iter().all(|s| s.lookup(stmt).is_some()))
        .collect();
    let class_of = |r: &super::dialect::RobotRule| order.parallel_class(r.dimension());
    applicable.sort_by_key(|(i, r)| (Reverse(order.rank_score(r.dimension())), class_of(r), *i));

    let mut out = Vec::new();
    let mut group = 0usize;
    for run in applicable.chunk_by(|(_, a), (_, b)| class_of(a) == class_of(b)) {
        let first = run[0].1.dimension();
        let concurrent = run.iter().any(|(_, r)| r.dimension() != first);
        for (_, rule) in run {
            let args: serde_json::Map<String, Value> = rule
                .args
                .iter()
                .map(|(k, t)| {
                    (
                        k.clone(),
                        Value::String(t.render(stmt).expect("required slots are present")),
                    )
                })
                .collect();
            out.push(json!({"cmd": rule.cmd, "args": args, "concurrent_group": group}));
            if !concurrent {
                group += 1;
            }
        }
        if concurrent {
            group += 1;
        }
    }
    if out.is_empty() {
        return Err(CompileError::EmptyCompilation(TargetProfile::RobotCmd));
    }
    Ok(Value::Array(out))
}

pub(super) fn twin_update(stmt: &Cyberstatement, dialect: &Dialect) -> Result<Value, CompileError> {
    let out: Vec<Value> = stmt
        .slots()
        .filter_map(|(d, key, value)| {
            let path = dialect.twin_paths.get(&super::SlotRef::new(d, key))?;
            Some(json!({"path": path, "value": value.canonical(), "ts": TS_PLACEHOLDER}))
        })
        .collect();
    if out.is_empty() {
        return Err(CompileError::EmptyCompilation(TargetProfile::TwinUpdate));
    }
    Ok(Value::Array(out))
}
