//! Cyber-mediated mapping tables between the non-cyber dimensions and the
//! computational layer, and the derived two-hop compositions.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cybersign::{Dimension, Reference};

/// Which primary mapping a table houses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MappingKind {
    #[serde(rename = "cp")]
    CP,
    #[serde(rename = "cs")]
    CS,
    #[serde(rename = "ct")]
    CT,
}

impl MappingKind {
    pub const ALL: [MappingKind; 3] = [MappingKind::CP, MappingKind::CS, MappingKind::CT];

    /// The non-cyber dimension on the domain side.
    pub fn dimension(self) -> Dimension {
        match self {
            MappingKind::CP => Dimension::P,
            MappingKind::CS => Dimension::S,
            MappingKind::CT => Dimension::T,
        }
    }

    pub fn for_dimension(d: Dimension) -> Option<MappingKind> {
        match d {
            Dimension::P => Some(MappingKind::CP),
            Dimension::S => Some(MappingKind::CS),
            Dimension::T => Some(MappingKind::CT),
            Dimension::C => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MappingKind::CP => "cp",
            MappingKind::CS => "cs",
            MappingKind::CT => "ct",
        }
    }
}

impl fmt::Display for MappingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum MappingError {
    #[error("{reference} is not mapped by {kind}{}", hop.map(|h| format!(" (hop {h})")).unwrap_or_default())]
    UnmappedReference {
        kind: MappingKind,
        reference: Reference,
        /// For derived compositions: 1 when the forward hop failed, 2 for the inverse hop.
        hop: Option<u8>,
    },
    #[error("{kind} table expects {expected}: refs, got {reference}")]
    NamespaceMismatch {
        kind: MappingKind,
        expected: Dimension,
        reference: Reference,
    },
    #[error("{kind} table already maps {reference}")]
    NotBijective { kind: MappingKind, reference: Reference },
    #[error("cannot derive a mapping from {from} to {to}")]
    InvalidDerivation { from: Dimension, to: Dimension },
    #[error("mapping file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A finite bijection between domain references of one dimension and `c:`
/// references.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingTable {
    kind: MappingKind,
    forward: BTreeMap<Reference, Reference>,
    inverse: BTreeMap<Reference, Reference>,
}

impl MappingTable {
    pub fn new(kind: MappingKind) -> MappingTable {
        MappingTable {
            kind,
            forward: BTreeMap::new(),
            inverse: BTreeMap::new(),
        }
    }

    pub fn kind(&self) -> MappingKind {
        self.kind
    }

    pub fn insert(&mut self, domain: Reference, cyber: Reference) -> Result<(), MappingError> {
        let expected = self.kind.dimension();
        if domain.namespace() != expected {
            return Err(MappingError::NamespaceMismatch {
                kind: self.kind,
                expected,
                reference: domain,
            });
        }
        if cyber.namespace() != Dimension::C {
            return Err(MappingError::NamespaceMismatch {
                kind: self.kind,
                expected: Dimension::C,
                reference: cyber,
            });
        }
        if self.forward.contains_key(&domain) {
            return Err(MappingError::NotBijective {
                kind: self.kind,
                reference: domain,
            });
        }
        if self.inverse.contains_key(&cyber) {
            return Err(MappingError::NotBijective {
                kind: self.kind,
                reference: cyber,
            });
        }
        self.forward.insert(domain.clone(), cyber.clone());
        self.inverse.insert(cyber, domain);
        Ok(())
    }

    pub fn forward(&self, domain: &Reference) -> Option<&Reference> {
        self.forward.get(domain)
    }

    pub fn inverse(&self, cyber: &Reference) -> Option<&Reference> {
        self.inverse.get(cyber)
    }

    /// Pairs in domain order.
    pub fn pairs(&self) -> impl Iterator<Item = (&Reference, &Reference)> {
        self.forward.iter()
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }
}

/// The three primary tables. Every derived mapping is composed from them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingRegistry {
    pub cp: MappingTable,
    pub cs: MappingTable,
    pub ct: MappingTable,
}

impl Default for MappingRegistry {
    fn default() -> Self {
        MappingRegistry::new()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistryFile {
    #[serde(default)]
    cp: Vec<(String, String)>,
    #[serde(default)]
    cs: Vec<(String, String)>,
    #[serde(default)]
    ct: Vec<(String, String)>,
}

impl MappingRegistry {
    pub fn new() -> MappingRegistry {
        MappingRegistry {
            cp: MappingTable::new(MappingKind::CP),
            cs: MappingTable::new(MappingKind::CS),
            ct: MappingTable::new(MappingKind::CT),
        }
    }

    pub fn table(&self, kind: MappingKind) -> &MappingTable {
        match kind {
            MappingKind::CP => &self.cp,
            MappingKind::CS => &self.cs,
            MappingKind::CT => &self.ct,
        }
    }

    pub fn table_mut(&mut self, kind: MappingKind) -> &mut MappingTable {
        match kind {
            MappingKind::CP => &mut self.cp,
            MappingKind::CS => &mut self.cs,
            MappingKind::CT => &mut self.ct,
        }
    }

    pub fn insert(&mut self, kind: MappingKind, domain: Reference, cyber: Reference) -> Result<(), MappingError> {
        self.table_mut(kind).insert(domain, cyber)
    }

    pub fn map_forward(&self, kind: MappingKind, domain: &Reference) -> Result<Reference, MappingError> {
        let expected = kind.dimension();
        if domain.namespace() != expected {
            return Err(MappingError::NamespaceMismatch {
                kind,
                expected,
                reference: domain.clone(),
            });
        }
        self.table(kind)
            .forward(domain)
            .cloned()
            .ok_or_else(|| MappingError::UnmappedReference {
                kind,
                reference: domain.clone(),
                hop: None,
            })
    }

    pub fn map_inverse(&self, kind: MappingKind, cyber: &Reference) -> Result<Reference, MappingError> {
        if cyber.namespace() != Dimension::C {
            return Err(MappingError::NamespaceMismatch {
                kind,
                expected: Dimension::C,
                reference: cyber.clone(),
            });
        }
        self.table(kind)
            .inverse(cyber)
            .cloned()
            .ok_or_else(|| MappingError::UnmappedReference {
                kind,
                reference: cyber.clone(),
                hop: None,
            })
    }

    /// `f_{from,to} = f_{C,to}^-1 . f_{C,from}`: into the cyber layer with
    /// the source table, back out with the target table.
    pub fn map_derived(
        &self,
        from: Dimension,
        to: Dimension,
        reference: &Reference,
    ) -> Result<Reference, MappingError> {
        let (Some(src), Some(dst)) = (MappingKind::for_dimension(from), MappingKind::for_dimension(to)) else {
            return Err(MappingError::InvalidDerivation { from, to });
        };
        if from == to {
            return Err(MappingError::InvalidDerivation { from, to });
        }
        let cyber = self.map_forward(src, reference).map_err(|e| with_hop(e, 1))?;
        self.map_inverse(dst, &cyber).map_err(|e| with_hop(e, 2))
    }

    pub fn from_json(text: &str) -> Result<MappingRegistry, MappingError> {
        let file: RegistryFile = serde_json::from_str(text).map_err(|e| MappingError::Format(e.to_string()))?;
        let mut registry = MappingRegistry::new();
        for (kind, pairs) in [
            (MappingKind::CP, file.cp),
            (MappingKind::CS, file.cs),
            (MappingKind::CT, file.ct),
        ] {
            for (d, c) in pairs {
                let d: Reference = d.parse().map_err(|e| MappingError::Format(format!("{kind}: {e}")))?;
                let c: Reference = c.parse().map_err(|e| MappingError::Format(format!("{kind}: {e}")))?;
                registry.insert(kind, d, c)?;
            }
        }
        Ok(registry)
    }

    /// Canonical form: sorted keys, pairs sorted lexicographically, trailing
    /// newline.
    pub fn to_json(&self) -> String {
        let pairs = |t: &MappingTable| {
            let mut v: Vec<(String, String)> = t.pairs().map(|(d, c)| (d.to_string(), c.to_string())).collect();
            v.sort();
            v
        };
        let file = RegistryFile {
            cp: pairs(&self.cp),
            cs: pairs(&self.cs),
            ct: pairs(&self.ct),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("serializable");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<MappingRegistry, MappingError> {
        MappingRegistry::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MappingError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

fn with_hop(e: MappingError, n: u8) -> MappingError {
    match e {
        MappingError::UnmappedReference { kind, reference, .. } => MappingError::UnmappedReference {
            kind,
            reference,
            hop: Some(n),
        },
        other => other,
    }
}
