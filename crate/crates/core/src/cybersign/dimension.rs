use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One axis of the physical/social/thinking/cyber space.
///
/// The derived ordering is the canonical printing order: `P < S < T < C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dimension {
    P,
    S,
    T,
    C,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [Dimension::P, Dimension::S, Dimension::T, Dimension::C];

    /// The three dimensions that map into the cyber layer.
    pub const NON_CYBER: [Dimension; 3] = [Dimension::P, Dimension::S, Dimension::T];

    pub fn letter(self) -> char {
        match self {
            Dimension::P => 'P',
            Dimension::S => 'S',
            Dimension::T => 'T',
            Dimension::C => 'C',
        }
    }

    /// Namespace prefix used by references into this dimension (`p`, `s`, `t`, `c`).
    pub fn namespace(self) -> &'static str {
        match self {
            Dimension::P => "p",
            Dimension::S => "s",
            Dimension::T => "t",
            Dimension::C => "c",
        }
    }

    pub fn from_letter(c: char) -> Option<Dimension> {
        match c {
            'P' => Some(Dimension::P),
            'S' => Some(Dimension::S),
            'T' => Some(Dimension::T),
            'C' => Some(Dimension::C),
            _ => None,
        }
    }

    pub fn from_namespace(ns: &str) -> Option<Dimension> {
        match ns {
            "p" => Some(Dimension::P),
            "s" => Some(Dimension::S),
            "t" => Some(Dimension::T),
            "c" => Some(Dimension::C),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        match (chars.next().and_then(Dimension::from_letter), chars.next()) {
            (Some(d), None) => Ok(d),
            _ => Err(format!("unknown dimension `{s}`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order() {
        let mut dims = vec![Dimension::C, Dimension::T, Dimension::P, Dimension::S];
        dims.sort();
        assert_eq!(dims, Dimension::ALL.to_vec());
    }

    #[test]
    fn letters_and_namespaces_round_trip() {
        for d in Dimension::ALL {
            assert_eq!(Dimension::from_letter(d.letter()), Some(d));
            assert_eq!(Dimension::from_namespace(d.namespace()), Some(d));
            assert_eq!(d.to_string().parse::<Dimension>(), Ok(d));
        }
        assert!("X".parse::<Dimension>().is_err());
        assert!("PS".parse::<Dimension>().is_err());
    }
}
