//! Implementation crate behind the `sgkit` binary.
//!
//! Every command is a pure function of (config file, input files, seed):
//! reruns produce byte-identical output files. All reports are JSON,
//! written atomically, and embed the effective-config hash plus the seed
//! so archived outputs can be traced to the run that produced them.

use std::fmt;

pub mod commands;
pub mod config;
pub mod gradsuite;

pub use config::{load_run, ResolvedRun, RunConfig};

/// Failure modes of a CLI run, carrying the process exit code:
/// verification failures (a check that ran and said "no") exit 1,
/// input problems (missing files, malformed config, bad dimensions)
/// exit 2.
#[derive(Debug)]
pub enum CliError {
    Verification(String),
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Verification(msg) => write!(f, "verification failed: {msg}"),
            CliError::Input(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<sgkit::Error> for CliError {
    fn from(e: sgkit::Error) -> Self {
        CliError::Input(e.to_string())
    }
}
