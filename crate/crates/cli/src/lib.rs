//! Configuration, orchestration and artifact output for `ricci-lab` runs.

pub mod config;
pub mod format;
pub mod manifest;
pub mod plots;
pub mod runner;
pub mod sweep;

use ricci_lab::monitor::MonitorError;
use std::path::PathBuf;
use thiserror::Error;

pub use config::RunConfig;
pub use manifest::{Manifest, RunStatus};
pub use runner::{run, RunOutcome};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERDICT: i32 = 2;
pub const EXIT_SINGULAR: i32 = 3;

/// Output root used when a path is relative and no flag overrides it.
pub const OUTPUT_ROOT_VAR: &str = "RICCI_LAB_OUTPUT_ROOT";

#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Monitor(#[from] MonitorError),
}

impl LabError {
    pub fn io(path: impl Into<PathBuf>, e: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Monitor(MonitorError::Flow(_) | MonitorError::NonFinite(_) | MonitorError::Quadrature(_)) => {
                EXIT_SINGULAR
            }
            _ => EXIT_USAGE,
        }
    }
}

/// `RICCI_LAB_OUTPUT_ROOT`, or the working directory.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}
