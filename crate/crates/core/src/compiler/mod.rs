//! Dialects and compilation of one statement into per-recipient surface
//! forms. Only machine-json is invertible; the other targets are
//! projections.

mod dialect;
mod machine;
mod targets;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::fdsg::Cyberstatement;

pub use dialect::{
    validate_against_dialect, Dialect, Filter, NlTemplate, RobotRule, Segment, SlotConstraint, SlotRef, Template,
    Violation,
};
pub use machine::{decompile_machine_json, decompile_value, directive_json, machine_json, MACHINE_JSON_SCHEMA};
pub use targets::TS_PLACEHOLDER;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetProfile {
    HumanNl,
    MachineJson,
    RobotCmd,
    TwinUpdate,
}

impl TargetProfile {
    pub const ALL: [TargetProfile; 4] = [
        TargetProfile::HumanNl,
        TargetProfile::MachineJson,
        TargetProfile::RobotCmd,
        TargetProfile::TwinUpdate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TargetProfile::HumanNl => "human-nl",
            TargetProfile::MachineJson => "machine-json",
            TargetProfile::RobotCmd => "robot-cmd",
            TargetProfile::TwinUpdate => "twin-update",
        }
    }
}

impl fmt::Display for TargetProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TargetProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        TargetProfile::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown target `{s}`"))
    }
}

/// One surface form. The payload is a JSON string for human-nl and a
/// structured document otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompiledForm {
    pub target: TargetProfile,
    pub source_statement_id: String,
    pub payload: Value,
}

impl CompiledForm {
    /// The sentence for human-nl; compact key-sorted JSON otherwise.
    pub fn text(&self) -> String {
        match &self.payload {
            Value::String(s) if self.target == TargetProfile::HumanNl => s.clone(),
            other => serde_json::to_string(other).expect("json value serializes"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("invalid dialect: {0}")]
    InvalidDialect(String),
    #[error("statement does not fit the dialect: {}", join(.0))]
    InvalidStatement(Vec<Violation>),
    #[error("invalid integration operator: {0}")]
    InvalidOmega(String),
    #[error("no natural-language template applies to the slots present")]
    NoApplicableTemplate,
    #[error("{0} compilation produced nothing")]
    EmptyCompilation(TargetProfile),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("schema violation: {0}")]
pub struct SchemaViolation(pub String);

/// Renders `stmt` for `target`. The statement must fit `dialect`.
pub fn compile(stmt: &Cyberstatement, target: TargetProfile, dialect: &Dialect) -> Result<CompiledForm, CompileError> {
    validate_against_dialect(stmt, dialect).map_err(CompileError::InvalidStatement)?;
    let payload = match target {
        TargetProfile::HumanNl => targets::human_nl(stmt, dialect)?,
        TargetProfile::MachineJson => machine_json(stmt),
        TargetProfile::RobotCmd => targets::robot_cmd(stmt, dialect)?,
        TargetProfile::TwinUpdate => targets::twin_update(stmt, dialect)?,
    };
    Ok(CompiledForm {
        target,
        source_statement_id: stmt.statement_id.clone(),
        payload,
    })
}
