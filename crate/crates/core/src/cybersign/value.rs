//! Typed slot values and their canonical text form.
//!
//! Every value has exactly one canonical print, and parsing that print gives
//! the value back. Numeric literals are classified by shape:
//!
//! * `50m`, `1800s`: a magnitude followed by a registered unit is a [`SemanticValue::Quantity`].
//! * `0.92`, `1.0`: an unsigned literal with a fractional part, no exponent and
//!   a value in `[0, 1]` is a [`SemanticValue::Probability`].
//! * everything else (`50`, `-3.5`, `5e-1`) is a [`SemanticValue::Number`].
//!
//! A plain number inside `(0, 1)` therefore prints in exponent form (`5e-1`)
//! so that it cannot be read back as a probability.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::Dimension;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValueError {
    #[error("empty value")]
    Empty,
    #[error("unknown unit `{0}`")]
    UnknownUnit(String),
    #[error("dimensionless quantity `{0}` must be written as a plain number")]
    DimensionlessQuantity(String),
    #[error("malformed number `{0}`")]
    MalformedNumber(String),
    #[error("number `{0}` is not finite")]
    NonFinite(String),
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(String),
    #[error("invalid identifier `{0}`")]
    InvalidIdentifier(String),
    #[error("invalid reference `{0}`")]
    InvalidReference(String),
    #[error("unterminated string literal")]
    UnterminatedText,
    #[error("invalid escape sequence in string literal")]
    InvalidEscape,
    #[error("unexpected trailing input after value: `{0}`")]
    Trailing(String),
}

/// Closed unit registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnitCode {
    Metre,
    Second,
    Kilogram,
    Hertz,
    Degree,
    Percent,
    /// Only meaningful in dialect constraints; a quantity never carries it.
    None,
}

impl UnitCode {
    pub const ALL: [UnitCode; 7] = [
        UnitCode::Metre,
        UnitCode::Second,
        UnitCode::Kilogram,
        UnitCode::Hertz,
        UnitCode::Degree,
        UnitCode::Percent,
        UnitCode::None,
    ];

    pub fn code(self) -> &'static str {
        match self {
            UnitCode::Metre => "m",
            UnitCode::Second => "s",
            UnitCode::Kilogram => "kg",
            UnitCode::Hertz => "Hz",
            UnitCode::Degree => "deg",
            UnitCode::Percent => "pct",
            UnitCode::None => "none",
        }
    }

    pub fn from_code(code: &str) -> Option<UnitCode> {
        UnitCode::ALL.into_iter().find(|u| u.code() == code)
    }
}

impl fmt::Display for UnitCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for UnitCode {
    type Err = ValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        UnitCode::from_code(s).ok_or_else(|| ValueError::UnknownUnit(s.to_string()))
    }
}

impl Serialize for UnitCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for UnitCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A namespaced opaque term such as `p:sector/A7`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Reference {
    namespace: Dimension,
    path: String,
}

impl Reference {
    pub fn new(namespace: Dimension, path: impl Into<String>) -> Result<Reference, ValueError> {
        let path = path.into();
        if !is_reference_path(&path) {
            return Err(ValueError::InvalidReference(format!(
                "{}:{}",
                namespace.namespace(),
                path
            )));
        }
        Ok(Reference { namespace, path })
    }

    pub fn namespace(&self) -> Dimension {
        self.namespace
    }

    pub fn path(&self) -> &str {
        &self.path
    }
}

fn is_reference_path(path: &str) -> bool {
    let mut chars = path.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphanumeric() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | '/'))
}

impl fmt::Display for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.namespace.namespace(), self.path)
    }
}

impl FromStr for Reference {
    type Err = ValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (ns, path) = s
            .split_once(':')
            .ok_or_else(|| ValueError::InvalidReference(s.to_string()))?;
        let namespace = Dimension::from_namespace(ns).ok_or_else(|| ValueError::InvalidReference(s.to_string()))?;
        Reference::new(namespace, path).map_err(|_| ValueError::InvalidReference(s.to_string()))
    }
}

impl Serialize for Reference {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Reference {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The discriminant of a [`SemanticValue`], used by dialect constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Identifier,
    Text,
    Number,
    Quantity,
    Probability,
    Reference,
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ValueKind::Identifier => "identifier",
            ValueKind::Text => "text",
            ValueKind::Number => "number",
            ValueKind::Quantity => "quantity",
            ValueKind::Probability => "probability",
            ValueKind::Reference => "reference",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SemanticValue {
    Identifier(String),
    Text(String),
    Number(f64),
    Quantity { magnitude: f64, unit: UnitCode },
    Probability(f64),
    Reference(Reference),
}

impl SemanticValue {
    pub fn identifier(name: impl Into<String>) -> Result<SemanticValue, ValueError> {
        let name = transliterate(&name.into());
        if is_identifier(&name) {
            Ok(SemanticValue::Identifier(name))
        } else {
            Err(ValueError::InvalidIdentifier(name))
        }
    }

    pub fn number(x: f64) -> Result<SemanticValue, ValueError> {
        check_finite(x)?;
        Ok(SemanticValue::Number(normalize_zero(x)))
    }

    pub fn quantity(magnitude: f64, unit: UnitCode) -> Result<SemanticValue, ValueError> {
        check_finite(magnitude)?;
        if unit == UnitCode::None {
            return Err(ValueError::DimensionlessQuantity(format!("{magnitude}none")));
        }
        Ok(SemanticValue::Quantity {
            magnitude: normalize_zero(magnitude),
            unit,
        })
    }

    pub fn probability(p: f64) -> Result<SemanticValue, ValueError> {
        check_finite(p)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(ValueError::ProbabilityOutOfRange(p.to_string()));
        }
        Ok(SemanticValue::Probability(normalize_zero(p)))
    }

    pub fn kind(&self) -> ValueKind {
        match self {
            SemanticValue::Identifier(_) => ValueKind::Identifier,
            SemanticValue::Text(_) => ValueKind::Text,
            SemanticValue::Number(_) => ValueKind::Number,
            SemanticValue::Quantity { .. } => ValueKind::Quantity,
            SemanticValue::Probability(_) => ValueKind::Probability,
            SemanticValue::Reference(_) => ValueKind::Reference,
        }
    }

    pub fn unit(&self) -> Option<UnitCode> {
        match self {
            SemanticValue::Quantity { unit, .. } => Some(*unit),
            _ => None,
        }
    }

    /// Checks the invariants a value built by hand might violate.
    pub fn validate(&self) -> Result<(), ValueError> {
        match self {
            SemanticValue::Identifier(s) if !is_identifier(s) => Err(ValueError::InvalidIdentifier(s.clone())),
            SemanticValue::Number(x) => check_finite(*x),
            SemanticValue::Quantity { magnitude, unit } => {
                check_finite(*magnitude)?;
                if *unit == UnitCode::None {
                    Err(ValueError::DimensionlessQuantity(format!("{magnitude}none")))
                } else {
                    Ok(())
                }
            }
            SemanticValue::Probability(p) => {
                check_finite(*p)?;
                if (0.0..=1.0).contains(p) {
                    Ok(())
                } else {
                    Err(ValueError::ProbabilityOutOfRange(p.to_string()))
                }
            }
            _ => Ok(()),
        }
    }

    /// Canonical text form; see the module docs for the numeric rules.
    pub fn canonical(&self) -> String {
        match self {
            SemanticValue::Identifier(s) => s.clone(),
            SemanticValue::Text(s) => quote_text(s),
            SemanticValue::Number(x) => print_number(*x),
            SemanticValue::Quantity { magnitude, unit } => {
                format!("{}{}", normalize_zero(*magnitude), unit.code())
            }
            SemanticValue::Probability(p) => {
                let s = normalize_zero(*p).to_string();
                if s.contains('.') {
                    s
                } else {
                    format!("{s}.0")
                }
            }
            SemanticValue::Reference(r) => r.to_string(),
        }
    }

    /// Parses a complete canonical (or input-form) value.
    pub fn parse(text: &str) -> Result<SemanticValue, ValueError> {
        if text.is_empty() {
            return Err(ValueError::Empty);
        }
        if text.starts_with('"') {
            let (s, used) = unquote_text(text)?;
            if used != text.len() {
                return Err(ValueError::Trailing(text[used..].to_string()));
            }
            return Ok(SemanticValue::Text(s));
        }
        parse_atom(text)
    }
}

impl fmt::Display for SemanticValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

impl FromStr for SemanticValue {
    type Err = ValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SemanticValue::parse(s)
    }
}

impl Serialize for SemanticValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.canonical())
    }
}

impl<'de> Deserialize<'de> for SemanticValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        SemanticValue::parse(&s).map_err(serde::de::Error::custom)
    }
}

fn check_finite(x: f64) -> Result<(), ValueError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(ValueError::NonFinite(x.to_string()))
    }
}

fn normalize_zero(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

fn print_number(x: f64) -> String {
    let x = normalize_zero(x);
    if x > 0.0 && x < 1.0 {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Greek letter names, lowercase then uppercase blocks.
const GREEK: [&str; 24] = [
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "iota", "kappa", "lambda", "mu", "nu", "xi",
    "omicron", "pi", "rho", "sigma", "tau", "upsilon", "phi", "chi", "psi", "omega",
];

/// ASCII name of a Greek letter, if `c` is one.
pub fn greek_name(c: char) -> Option<String> {
    let code = c as u32;
    let (base, upper) = match code {
        0x3B1..=0x3C9 => (0x3B1, false),
        0x391..=0x3A9 => (0x391, true),
        _ => return None,
    };
    let mut idx = (code - base) as usize;
    // final sigma (U+03C2) and the unassigned U+03A2 sit inside the ranges
    if idx == 17 && upper {
        return None;
    }
    if idx > 17 {
        idx -= 1;
    }
    let name = GREEK[idx];
    Some(if upper {
        let mut s = name.to_string();
        s[..1].make_ascii_uppercase();
        s
    } else {
        name.to_string()
    })
}

/// Replaces Greek letters with their ASCII names; other characters pass through.
pub fn transliterate(s: &str) -> String {
    if s.is_ascii() {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len() + 8);
    for c in s.chars() {
        match greek_name(c) {
            Some(name) => out.push_str(&name),
            None => out.push(c),
        }
    }
    out
}

fn parse_atom(raw: &str) -> Result<SemanticValue, ValueError> {
    let text = transliterate(raw);
    let first = text.chars().next().ok_or(ValueError::Empty)?;
    if first.is_ascii_digit() || (first == '-' && text[1..].starts_with(|c: char| c.is_ascii_digit())) {
        return parse_numeric(&text);
    }
    if text.contains(':') {
        return text.parse::<Reference>().map(SemanticValue::Reference);
    }
    if is_identifier(&text) {
        Ok(SemanticValue::Identifier(text))
    } else {
        Err(ValueError::InvalidIdentifier(text))
    }
}

fn parse_numeric(text: &str) -> Result<SemanticValue, ValueError> {
    let bytes = text.as_bytes();
    let mut i = 0;
    let signed = bytes[0] == b'-';
    if signed {
        i += 1;
    }
    let digits = |i: &mut usize| {
        let start = *i;
        while *i < bytes.len() && bytes[*i].is_ascii_digit() {
            *i += 1;
        }
        *i > start
    };
    if !digits(&mut i) {
        return Err(ValueError::MalformedNumber(text.to_string()));
    }
    let mut fractional = false;
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        if !digits(&mut i) {
            return Err(ValueError::MalformedNumber(text.to_string()));
        }
        fractional = true;
    }
    let mut exponent = false;
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        i += 1;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            i += 1;
        }
        if !digits(&mut i) {
            return Err(ValueError::MalformedNumber(text.to_string()));
        }
        exponent = true;
    }
    let (literal, unit) = text.split_at(i);
    let magnitude: f64 = literal
        .parse()
        .map_err(|_| ValueError::MalformedNumber(text.to_string()))?;
    check_finite(magnitude).map_err(|_| ValueError::NonFinite(text.to_string()))?;
    if !unit.is_empty() {
        if !unit.bytes().all(|b| b.is_ascii_alphabetic()) {
            return Err(ValueError::MalformedNumber(text.to_string()));
        }
        let unit = UnitCode::from_code(unit).ok_or_else(|| ValueError::UnknownUnit(unit.to_string()))?;
        if unit == UnitCode::None {
            return Err(ValueError::DimensionlessQuantity(text.to_string()));
        }
        return SemanticValue::quantity(magnitude, unit);
    }
    if !signed && fractional && !exponent && (0.0..=1.0).contains(&magnitude) {
        return SemanticValue::probability(magnitude);
    }
    SemanticValue::number(magnitude)
}

fn quote_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c.is_control() => out.push_str(&format!("\\u{{{:x}}}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Reads a quoted string starting at `text[0] == '"'`; returns the content and
/// the number of bytes consumed including both quotes.
pub(crate) fn unquote_text(text: &str) -> Result<(String, usize), ValueError> {
    let mut out = String::new();
    let mut chars = text.char_indices();
    chars.next();
    while let Some((i, c)) = chars.next() {
        match c {
            '"' => return Ok((out, i + 1)),
            '\\' => {
                let (_, e) = chars.next().ok_or(ValueError::UnterminatedText)?;
                match e {
                    '"' => out.push('"'),
                    '\\' => out.push('\\'),
                    'n' => out.push('\n'),
                    'r' => out.push('\r'),
                    't' => out.push('\t'),
                    'u' => {
                        if chars.next().map(|(_, c)| c) != Some('{') {
                            return Err(ValueError::InvalidEscape);
                        }
                        let mut hex = String::new();
                        loop {
                            match chars.next() {
                                Some((_, '}')) => break,
                                Some((_, h)) if h.is_ascii_hexdigit() && hex.len() < 6 => hex.push(h),
                                _ => return Err(ValueError::InvalidEscape),
                            }
                        }
                        let code = u32::from_str_radix(&hex, 16).map_err(|_| ValueError::InvalidEscape)?;
                        out.push(char::from_u32(code).ok_or(ValueError::InvalidEscape)?);
                    }
                    _ => return Err(ValueError::InvalidEscape),
                }
            }
            c => out.push(c),
        }
    }
    Err(ValueError::UnterminatedText)
}
