//! `cyl`: parse, check, compile, resolve and simulate Cyberlanguage
//! statements, or run the semantic bus as a TCP service.
//!
//! Exit codes: 0 success, 1 semantic or validation failure, 2 environment or
//! IO failure, 3 unresolved ambiguity.

mod commands;
mod config;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cyberlang::compiler::TargetProfile;

use config::CliConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Exit {
    Ok = 0,
    Invalid = 1,
    Environment = 2,
    Ambiguous = 3,
}

/// A command that could not finish. The message goes to standard error.
#[derive(Debug)]
pub struct Failure {
    pub exit: Exit,
    pub message: String,
}

impl Failure {
    pub fn env(message: impl Into<String>) -> Failure {
        Failure {
            exit: Exit::Environment,
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Failure {
        Failure {
            exit: Exit::Invalid,
            message: message.into(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cyl", version, about = "Cyberlanguage toolchain")]
struct Cli {
    #[command(flatten)]
    config: CliConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetArg {
    One(TargetProfile),
    All,
}

fn parse_target(s: &str) -> Result<TargetArg, String> {
    if s == "all" {
        return Ok(TargetArg::All);
    }
    s.parse().map(TargetArg::One).map_err(|_| {
        let names: Vec<&str> = TargetProfile::ALL.iter().map(|t| t.as_str()).collect();
        format!("expected one of {}, all", names.join(", "))
    })
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print each statement of a .cyl file in canonical form
    Parse { file: PathBuf },
    /// Report dialect violations and fusion coherence of bound signs
    Check { file: PathBuf },
    /// Compile statements to a surface form
    Compile {
        file: PathBuf,
        /// human-nl, machine-json, robot-cmd, twin-update or all
        #[arg(long, value_parser = parse_target)]
        target: TargetArg,
    },
    /// Evaluate statement meaning in the configured context
    Resolve { file: PathBuf },
    /// Run a scenario script and write its corpus export
    Simulate {
        scenario: PathBuf,
        /// Corpus destination; standard output when omitted
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run the broker as a TCP service until interrupted
    Serve {
        #[arg(long, default_value = "127.0.0.1:7878")]
        addr: SocketAddr,
        /// Write the corpus here on shutdown
        #[arg(long)]
        corpus_out: Option<PathBuf>,
    },
    /// Corpus file utilities
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
}

#[derive(Debug, Subcommand)]
enum CorpusCommand {
    /// Check every line of a corpus export against the record schema
    Validate { file: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_level = if matches!(cli.command, Command::Serve { .. }) {
        "info"
    } else {
        "warn"
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| default_level.into()))
        .init();

    let cfg = &cli.config;
    let result = match &cli.command {
        Command::Parse { file } => commands::parse(cfg, file),
        Command::Check { file } => commands::check(cfg, file),
        Command::Compile { file, target } => commands::compile(cfg, file, *target),
        Command::Resolve { file } => commands::resolve(cfg, file),
        Command::Simulate { scenario, out } => commands::simulate(cfg, scenario, out.as_deref()),
        Command::Serve { addr, corpus_out } => commands::serve(cfg, *addr, corpus_out.as_deref()),
        Command::Corpus {
            command: CorpusCommand::Validate { file },
        } => commands::corpus_validate(cfg, file),
    };
    match result {
        Ok(exit) => ExitCode::from(exit as u8),
        Err(f) => {
            eprintln!("cyl: {}", f.message);
            ExitCode::from(f.exit as u8)
        }
    }
}
