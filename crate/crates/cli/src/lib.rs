//! Command implementations behind the `netiss` binary.
//!
//! Every command takes a [`Job`] (parsed config, explicit seed, output
//! directory), computes a report and returns an [`Outcome`] holding the
//! files to write. [`Outcome::commit`] writes them atomically.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use thiserror::Error;

pub use commands::{
    certify, cmd_certify, cmd_gains_check, cmd_simulate, cmd_subnetwork, cmd_trace_theorem1, gains_check, subnet,
    trace_theorem1, CertifyReport, GainsCheckReport, SimulateSummary, SubnetworkReport, TraceReport,
    UniformCertificate,
};
pub use config::{JobConfig, LoadedNetwork};
pub use output::Outcome;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad invocation or configuration; exit code 2.
    #[error("usage: {0}")]
    Usage(String),
    /// A certification step failed or a falsifier found a witness; exit code 1.
    #[error("failed: {0}")]
    Failed(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) | CliError::Io(_) => 2,
        }
    }
}

impl From<netiss_core::Error> for CliError {
    fn from(e: netiss_core::Error) -> Self {
        use netiss_core::Error as E;
        match e {
            E::Certification(_) | E::BlowUp { .. } | E::NotInvertible(_) => CliError::Failed(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

/// One command invocation.
#[derive(Clone, Debug)]
pub struct Job {
    pub config: JobConfig,
    /// Directory that relative network paths are resolved against.
    pub base: PathBuf,
    pub seed: u64,
}

impl Job {
    pub fn load(path: &std::path::Path, seed: u64) -> Result<Job, CliError> {
        let (config, base) = JobConfig::load(path)?;
        Ok(Job { config, base, seed })
    }

    pub fn from_str(text: &str, seed: u64) -> Result<Job, CliError> {
        Ok(Job { config: JobConfig::parse(text)?, base: PathBuf::from("."), seed })
    }
}
