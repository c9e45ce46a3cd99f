use std::collections::BTreeMap;

use serde::Serialize;

use crate::cybersign::{Cybersign, Dimension, Reference};

use super::mapping::{MappingKind, MappingRegistry};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    Coherent,
    /// The dyad maps into the cyber layer, but not onto the sign's own
    /// cyber signified.
    Incoherent {
        maps_to: Reference,
    },
    Unverifiable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoherenceReport {
    pub lambda: String,
    pub verdicts: BTreeMap<Dimension, Verdict>,
}

impl CoherenceReport {
    pub fn is_coherent(&self) -> bool {
        self.verdicts.values().all(|v| *v == Verdict::Coherent)
    }
}

/// Checks that the P, S and T dyads of `sign` all map onto its C signified.
pub fn check_fusion(registry: &MappingRegistry, sign: &Cybersign) -> CoherenceReport {
    let target = &sign.dyad(Dimension::C).signified;
    let verdicts = MappingKind::ALL
        .into_iter()
        .map(|kind| {
            let d = kind.dimension();
            let verdict = match registry.map_forward(kind, &sign.dyad(d).signified) {
                Ok(c) if &c == target => Verdict::Coherent,
                Ok(c) => Verdict::Incoherent { maps_to: c },
                Err(_) => Verdict::Unverifiable,
            };
            (d, verdict)
        })
        .collect();
    CoherenceReport {
        lambda: sign.lambda().to_string(),
        verdicts,
    }
}
