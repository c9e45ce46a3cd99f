use std::io;
use std::path::Path;
use std::sync::Arc;

use indexmap::IndexMap;
use parking_lot::{RwLock, RwLockReadGuard, RwLockWriteGuard};
use thiserror::Error;

use super::{Cybersign, SignError};

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("sign `{0}` is already registered with identical dyads")]
    DuplicateSign(String),
    #[error(transparent)]
    InvalidSign(#[from] SignError),
    #[error("registry file: {0}")]
    Io(#[from] io::Error),
    #[error("registry file: {0}")]
    Format(#[from] serde_json::Error),
}

/// Sign repository keyed by linguistic signifier. One signifier may carry
/// several senses (homonyms); lookups return them in registration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SignRegistry {
    entries: IndexMap<String, Vec<Cybersign>>,
}

impl SignRegistry {
    pub fn new() -> SignRegistry {
        SignRegistry::default()
    }

    pub fn register(&mut self, sign: Cybersign) -> Result<(), RegistryError> {
        let senses = self.entries.entry(sign.lambda().to_string()).or_default();
        if senses.contains(&sign) {
            return Err(RegistryError::DuplicateSign(sign.lambda().to_string()));
        }
        senses.push(sign);
        Ok(())
    }

    /// Functional form: returns a new registry with `sign` added.
    pub fn with(mut self, sign: Cybersign) -> Result<SignRegistry, RegistryError> {
        self.register(sign)?;
        Ok(self)
    }

    pub fn lookup(&self, lambda: &str) -> &[Cybersign] {
        self.entries.get(lambda).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Cybersign> {
        self.entries.values().flatten()
    }

    pub fn from_json(text: &str) -> Result<SignRegistry, RegistryError> {
        let signs: Vec<Cybersign> = serde_json::from_str(text)?;
        let mut registry = SignRegistry::new();
        for sign in signs {
            registry.register(sign)?;
        }
        Ok(registry)
    }

    /// Key-sorted JSON array with a trailing newline.
    pub fn to_json(&self) -> String {
        let signs: Vec<&Cybersign> = self.iter().collect();
        let value = serde_json::to_value(signs).expect("signs serialize");
        let mut out = serde_json::to_string_pretty(&value).expect("value serializes");
        out.push('\n');
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SignRegistry, RegistryError> {
        SignRegistry::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RegistryError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// Read-mostly handle: many concurrent readers, one writer at a time.
#[derive(Debug, Clone, Default)]
pub struct SharedSignRegistry(Arc<RwLock<SignRegistry>>);

impl SharedSignRegistry {
    pub fn new(registry: SignRegistry) -> SharedSignRegistry {
        SharedSignRegistry(Arc::new(RwLock::new(registry)))
    }

    pub fn read(&self) -> RwLockReadGuard<'_, SignRegistry> {
        self.0.read()
    }

    pub fn write(&self) -> RwLockWriteGuard<'_, SignRegistry> {
        self.0.write()
    }

    pub fn register(&self, sign: Cybersign) -> Result<(), RegistryError> {
        self.0.write().register(sign)
    }

    pub fn snapshot(&self) -> SignRegistry {
        self.0.read().clone()
    }
}
