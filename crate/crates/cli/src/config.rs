use std::path::{Path, PathBuf};

use cyberlang::compiler::Dialect;
use cyberlang::semantics::{ContextSnapshot, MappingRegistry};
use cyberlang::SignRegistry;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Json,
}

/// Inputs shared by every command. Unset paths fall back to an empty sign
/// registry, empty mapping tables, the bundled dialect and an empty context.
#[derive(Debug, Clone, clap::Args)]
pub struct CliConfig {
    /// Sign registry (JSON array of sign records)
    #[arg(long, global = true, env = "CYL_REGISTRY")]
    pub registry: Option<PathBuf>,
    /// Mapping tables (cp/cs/ct pairs)
    #[arg(long, global = true, env = "CYL_MAPPINGS")]
    pub mappings: Option<PathBuf>,
    /// Dialect definition; defaults to the bundled emergency-response dialect
    #[arg(long, global = true, env = "CYL_DIALECT")]
    pub dialect: Option<PathBuf>,
    /// Context snapshot
    #[arg(long, global = true, env = "CYL_CONTEXT")]
    pub context: Option<PathBuf>,
    /// Seed for statement ids and simulated runs
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

/// [`CliConfig`] with every file read and checked.
pub struct Loaded {
    pub signs: SignRegistry,
    pub mappings: MappingRegistry,
    pub dialect: Dialect,
    pub context: ContextSnapshot,
}

pub fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::env(format!("{}: {e}", path.display())))
}

fn load<T, E: std::fmt::Display>(
    path: &Option<PathBuf>,
    default: impl FnOnce() -> T,
    parse: impl FnOnce(&str) -> Result<T, E>,
) -> Result<T, Failure> {
    match path {
        None => Ok(default()),
        Some(p) => parse(&read(p)?).map_err(|e| Failure::env(format!("{}: {e}", p.display()))),
    }
}

impl CliConfig {
    pub fn load(&self) -> Result<Loaded, Failure> {
        Ok(Loaded {
            signs: load(&self.registry, SignRegistry::new, SignRegistry::from_json)?,
            mappings: load(&self.mappings, MappingRegistry::new, MappingRegistry::from_json)?,
            dialect: load(&self.dialect, Dialect::emergency_response, Dialect::from_json)?,
            context: load(&self.context, || ContextSnapshot::empty(0), ContextSnapshot::from_json)?,
        })
    }
}
