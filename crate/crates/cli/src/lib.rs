//! Batch driver for the embedding pipeline: classify, check, solve, simulate,
//! embed and verify, with JSON reports that carry the resolved config.

pub mod commands;
pub mod config;

pub use commands::{run, Command, Outcome};
pub use config::{PairSpec, RunConfig};

use thiserror::Error;

/// Code version stamped into every report.
pub const VERSION: &str = concat!("levy-embed ", env!("CARGO_PKG_VERSION"));

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Failure = 1,
    Rejected = 2,
    Unverified = 3,
    VerifyFailed = 5,
    Usage = 64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("{0}")]
    Pipeline(String),
}

impl CliError {
    pub fn exit(&self) -> Exit {
        match self {
            CliError::Config(_) => Exit::Usage,
            _ => Exit::Failure,
        }
    }

    pub(crate) fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }
}
