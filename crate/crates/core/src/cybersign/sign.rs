use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Dimension, Reference};
use crate::digest::sha256_hex;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignError {
    #[error("linguistic signifier must not be empty")]
    EmptyLambda,
    #[error("sign `{lambda}` is missing its {dimension} dyad")]
    MissingDyad { lambda: String, dimension: Dimension },
    #[error("{dimension} dyad of `{lambda}` points into namespace `{found}`")]
    InvalidDyadNamespace {
        lambda: String,
        dimension: Dimension,
        found: String,
    },
}

/// A dimensional signifier together with the term it signifies.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DimensionalDyad {
    pub signifier: String,
    pub signified: Reference,
}

impl DimensionalDyad {
    pub fn new(signifier: impl Into<String>, signified: Reference) -> DimensionalDyad {
        DimensionalDyad {
            signifier: signifier.into(),
            signified,
        }
    }
}

/// A surface signifier bound to one dyad per dimension.
///
/// Construction goes through [`Cybersign::new`], which enforces that all four
/// dyads exist and that each signified term lives in its own dimension's
/// namespace. Fields are read-only afterwards.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Cybersign {
    lambda: String,
    dyads: BTreeMap<Dimension, DimensionalDyad>,
}

impl Cybersign {
    pub fn new(lambda: impl Into<String>, dyads: BTreeMap<Dimension, DimensionalDyad>) -> Result<Cybersign, SignError> {
        let lambda = lambda.into();
        if lambda.is_empty() {
            return Err(SignError::EmptyLambda);
        }
        for d in Dimension::ALL {
            let dyad = dyads.get(&d).ok_or_else(|| SignError::MissingDyad {
                lambda: lambda.clone(),
                dimension: d,
            })?;
            if dyad.signified.namespace() != d {
                return Err(SignError::InvalidDyadNamespace {
                    lambda,
                    dimension: d,
                    found: dyad.signified.namespace().namespace().to_string(),
                });
            }
        }
        Ok(Cybersign { lambda, dyads })
    }

    /// Shorthand taking `(signifier, signified)` in P, S, T, C order.
    pub fn from_parts(lambda: impl Into<String>, parts: [(&str, Reference); 4]) -> Result<Cybersign, SignError> {
        let dyads = Dimension::ALL
            .into_iter()
            .zip(parts)
            .map(|(d, (sig, r))| (d, DimensionalDyad::new(sig, r)))
            .collect();
        Cybersign::new(lambda, dyads)
    }

    pub fn lambda(&self) -> &str {
        &self.lambda
    }

    pub fn dyad(&self, dimension: Dimension) -> &DimensionalDyad {
        // total by construction
        &self.dyads[&dimension]
    }

    pub fn dyads(&self) -> impl Iterator<Item = (Dimension, &DimensionalDyad)> {
        self.dyads.iter().map(|(d, dyad)| (*d, dyad))
    }

    /// Hex SHA-256 of the key-sorted JSON form; stable across agents.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(&serde_json::to_value(self).expect("sign serializes")).expect("value serializes");
        sha256_hex(&json)
    }
}

impl<'de> Deserialize<'de> for Cybersign {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            lambda: String,
            dyads: BTreeMap<Dimension, DimensionalDyad>,
        }
        let raw = Raw::deserialize(deserializer)?;
        Cybersign::new(raw.lambda, raw.dyads).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Reference {
        s.parse().unwrap()
    }

    pub(crate) fn danger() -> Cybersign {
        Cybersign::from_parts(
            "danger",
            [
                ("obstacle", r("p:hazard/obstacle")),
                ("public-opinion", r("s:risk/public-opinion")),
                ("judgment", r("t:bias/judgment")),
                ("algorithmic", r("c:anomaly/algorithmic")),
            ],
        )
        .unwrap()
    }

    #[test]
    fn projection_is_total() {
        let s = danger();
        assert_eq!(s.dyads().count(), 4);
        for d in Dimension::ALL {
            assert_eq!(s.dyad(d).signified.namespace(), d);
        }
    }

    #[test]
    fn namespace_mismatch_rejected() {
        let err = Cybersign::from_parts(
            "danger",
            [
                ("obstacle", r("p:hazard/obstacle")),
                ("risk", r("s:risk/x")),
                ("bias", r("c:foo")),
                ("anomaly", r("c:anomaly/x")),
            ],
        )
        .unwrap_err();
        assert!(matches!(
            err,
            SignError::InvalidDyadNamespace {
                dimension: Dimension::T,
                ..
            }
        ));
    }

    #[test]
    fn missing_dyad_and_empty_lambda() {
        let mut dyads = BTreeMap::new();
        dyads.insert(Dimension::P, DimensionalDyad::new("x", r("p:x")));
        assert!(matches!(
            Cybersign::new("x", dyads.clone()),
            Err(SignError::MissingDyad {
                dimension: Dimension::S,
                ..
            })
        ));
        assert_eq!(Cybersign::new("", dyads), Err(SignError::EmptyLambda));
    }

    #[test]
    fn digest_is_content_addressed() {
        let a = danger();
        assert_eq!(a.digest(), danger().digest());
        assert_eq!(a.digest().len(), 64);
        let json = serde_json::to_string(&a).unwrap();
        let back: Cybersign = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
    }
}
