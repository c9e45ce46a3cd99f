use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cybersign::{Dimension, SemanticValue, UnitCode, ValueKind};
use crate::fdsg::{is_slot_key, Cyberstatement};

use super::CompileError;

/// `D.key`, naming one slot of a statement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlotRef {
    pub dimension: Dimension,
    pub key: String,
}

impl SlotRef {
    pub fn new(dimension: Dimension, key: &str) -> SlotRef {
        SlotRef {
            dimension,
            key: key.to_string(),
        }
    }

    pub fn lookup<'a>(&self, stmt: &'a Cyberstatement) -> Option<&'a SemanticValue> {
        stmt.slot(self.dimension, &self.key)
    }
}

impl fmt::Display for SlotRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.dimension, self.key)
    }
}

impl FromStr for SlotRef {
    type Err = String;

    fn from_str(s: &str) -> Result<SlotRef, String> {
        let (d, key) = s
            .split_once('.')
            .ok_or_else(|| format!("`{s}` is not of the form D.key"))?;
        let dimension: Dimension = d.parse().map_err(|_| format!("`{s}`: unknown dimension `{d}`"))?;
        if !is_slot_key(key) {
            return Err(format!("`{s}`: invalid slot key"));
        }
        Ok(SlotRef::new(dimension, key))
    }
}

impl Serialize for SlotRef {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SlotRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Allowed value shape for one slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotConstraint {
    #[serde(rename = "type")]
    pub kind: ValueKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<UnitCode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Filter {
    /// Upper-cases the first character.
    Cap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Literal(String),
    Slot(SlotRef, Option<Filter>),
}

/// A text with `{D.key}` or `{D.key|cap}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    source: String,
    segments: Vec<Segment>,
}

impl Template {
    pub fn parse(source: &str) -> Result<Template, String> {
        let mut segments = Vec::new();
        let mut rest = source;
        while !rest.is_empty() {
            match rest.find(['{', '}']) {
                None => {
                    segments.push(Segment::Literal(rest.to_string()));
                    break;
                }
                Some(i) if rest.as_bytes()[i] == b'}' => return Err(format!("stray `}}` in `{source}`")),
                Some(i) => {
                    if i > 0 {
                        segments.push(Segment::Literal(rest[..i].to_string()));
                    }
                    let close = rest[i..]
                        .find('}')
                        .ok_or_else(|| format!("unclosed `{{` in `{source}`"))?
                        + i;
                    let inner = &rest[i + 1..close];
                    let (slot, filter) = match inner.split_once('|') {
                        Some((s, "cap")) => (s, Some(Filter::Cap)),
                        Some((_, f)) => return Err(format!("unknown filter `{f}` in `{source}`")),
                        None => (inner, None),
                    };
                    segments.push(Segment::Slot(slot.parse()?, filter));
                    rest = &rest[close + 1..];
                }
            }
        }
        Ok(Template {
            source: source.to_string(),
            segments,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn slots(&self) -> impl Iterator<Item = &SlotRef> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Slot(r, _) => Some(r),
            Segment::Literal(_) => None,
        })
    }

    /// Literal text between placeholders.
    pub fn literals(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Literal(l) => Some(l.as_str()),
            Segment::Slot(..) => None,
        })
    }

    /// Fills every placeholder with the canonical print of its slot; `None`
    /// if a slot is missing.
    pub fn render(&self, stmt: &Cyberstatement) -> Option<String> {
        let mut out = String::new();
        for seg in &self.segments {
            match seg {
                Segment::Literal(l) => out.push_str(l),
                Segment::Slot(r, filter) => {
                    let text = r.lookup(stmt)?.canonical();
                    match filter {
                        Some(Filter::Cap) => {
                            let mut chars = text.chars();
                            if let Some(first) = chars.next() {
                                out.extend(first.to_uppercase());
                                out.push_str(chars.as_str());
                            }
                        }
                        None => out.push_str(&text),
                    }
                }
            }
        }
        Some(out)
    }
}

impl Serialize for Template {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for Template {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Template::parse(&String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlTemplate {
    pub template: Template,
    pub requires: BTreeSet<SlotRef>,
}

/// Emits `cmd` with rendered `args` when every required slot is present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotRule {
    pub requires: BTreeSet<SlotRef>,
    pub cmd: String,
    #[serde(default)]
    pub args: BTreeMap<String, Template>,
}

impl RobotRule {
    /// The single dimension all required slots come from.
    pub fn dimension(&self) -> Dimension {
        self.requires.iter().next().expect("validated non-empty").dimension
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dialect {
    pub name: String,
    pub allowed_slots: BTreeMap<Dimension, BTreeMap<String, SlotConstraint>>,
    #[serde(default)]
    pub nl_templates: Vec<NlTemplate>,
    #[serde(default)]
    pub robot_rules: Vec<RobotRule>,
    #[serde(default)]
    pub twin_paths: BTreeMap<SlotRef, String>,
}

const EMERGENCY_RESPONSE: &str = include_str!("../../data/emergency-response.dialect.json");

/// Why a statement does not fit a dialect.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    UnknownKey {
        slot: SlotRef,
    },
    WrongType {
        slot: SlotRef,
        expected: ValueKind,
        found: ValueKind,
    },
    WrongUnit {
        slot: SlotRef,
        expected: UnitCode,
        found: Option<UnitCode>,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownKey { slot } => write!(f, "{slot}: unknown key"),
            Violation::WrongType { slot, expected, found } => write!(f, "{slot}: expected {expected}, found {found}"),
            Violation::WrongUnit { slot, expected, found } => write!(
                f,
                "{slot}: expected unit {}, found {}",
                expected.code(),
                found.map_or("none", |u| u.code())
            ),
        }
    }
}

impl Dialect {
    pub fn from_json(text: &str) -> Result<Dialect, CompileError> {
        let dialect: Dialect = serde_json::from_str(text).map_err(|e| CompileError::InvalidDialect(e.to_string()))?;
        dialect.validate()?;
        Ok(dialect)
    }

    /// Key-sorted pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("serializable");
        let mut s = serde_json::to_string_pretty(&value).expect("serializable");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Dialect, CompileError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| CompileError::InvalidDialect(format!("{}: {e}", path.display())))?;
        Dialect::from_json(&text)
    }

    /// The bundled emergency-response dialect.
    pub fn emergency_response() -> Dialect {
        Dialect::from_json(EMERGENCY_RESPONSE).expect("bundled dialect is valid")
    }

    pub fn constraint(&self, slot: &SlotRef) -> Option<&SlotConstraint> {
        self.allowed_slots.get(&slot.dimension)?.get(&slot.key)
    }

    fn allows(&self, slot: &SlotRef) -> bool {
        self.constraint(slot).is_some()
    }

    pub fn validate(&self) -> Result<(), CompileError> {
        let bad = |msg: String| Err(CompileError::InvalidDialect(format!("{}: {msg}", self.name)));
        if self.name.is_empty() {
            return bad("empty name".into());
        }
        for (d, slots) in &self.allowed_slots {
            for (key, c) in slots {
                if !is_slot_key(key) {
                    return bad(format!("invalid key {d}.{key}"));
                }
                if c.unit.is_some() && c.kind != ValueKind::Quantity {
                    return bad(format!("{d}.{key}: only quantities carry units"));
                }
                if c.unit == Some(UnitCode::None) {
                    return bad(format!("{d}.{key}: a quantity needs a real unit"));
                }
            }
        }
        for t in &self.nl_templates {
            for slot in t.template.slots().chain(&t.requires) {
                if !self.allows(slot) {
                    return bad(format!("template names {slot}, which is not an allowed slot"));
                }
            }
            if let Some(slot) = t.template.slots().find(|s| !t.requires.contains(s)) {
                return bad(format!("template uses {slot} without requiring it"));
            }
        }
        for r in &self.robot_rules {
            if r.cmd.is_empty() {
                return bad("robot rule without a command".into());
            }
            let Some(first) = r.requires.iter().next() else {
                return bad(format!("robot rule `{}` requires nothing", r.cmd));
            };
            if !matches!(first.dimension, Dimension::P | Dimension::C) {
                return bad(format!(
                    "robot rule `{}` reads {}; robots act on P and C only",
                    r.cmd, first.dimension
                ));
            }
            if r.requires.iter().any(|s| s.dimension != first.dimension) {
                return bad(format!("robot rule `{}` mixes dimensions", r.cmd));
            }
            for slot in r.requires.iter().chain(r.args.values().flat_map(|t| t.slots())) {
                if !self.allows(slot) {
                    return bad(format!(
                        "robot rule `{}` names {slot}, which is not an allowed slot",
                        r.cmd
                    ));
                }
                if !r.requires.contains(slot) {
                    return bad(format!("robot rule `{}` uses {slot} without requiring it", r.cmd));
                }
            }
        }
        for (slot, path) in &self.twin_paths {
            if !self.allows(slot) {
                return bad(format!("twin path for {slot}, which is not an allowed slot"));
            }
            if path.is_empty() {
                return bad(format!("empty twin path for {slot}"));
            }
        }
        Ok(())
    }

    /// Every slot checked against `allowed_slots`. Empty means the statement
    /// fits.
    pub fn check(&self, stmt: &Cyberstatement) -> Vec<Violation> {
        let mut out = Vec::new();
        for (d, key, value) in stmt.slots() {
            let slot = SlotRef::new(d, key);
            let Some(c) = self.constraint(&slot) else {
                out.push(Violation::UnknownKey { slot });
                continue;
            };
            if value.kind() != c.kind {
                out.push(Violation::WrongType {
                    slot,
                    expected: c.kind,
                    found: value.kind(),
                });
                continue;
            }
            if let Some(unit) = c.unit {
                if value.unit() != Some(unit) {
                    out.push(Violation::WrongUnit {
                        slot,
                        expected: unit,
                        found: value.unit(),
                    });
                }
            }
        }
        out
    }
}

/// `Ok` when `stmt` fits `dialect`, otherwise every violation.
pub fn validate_against_dialect(stmt: &Cyberstatement, dialect: &Dialect) -> Result<(), Vec<Violation>> {
    let v = dialect.check(stmt);
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}
