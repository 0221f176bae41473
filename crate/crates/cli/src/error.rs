use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Scenario {
        path: PathBuf,
        #[source]
        source: pipecrawl::world::ScenarioError,
    },
    #[error("{path}: invalid suite spec: {reason}")]
    Spec { path: PathBuf, reason: String },
    #[error("{path}: malformed report: {reason}")]
    Report { path: PathBuf, reason: String },
    #[error("{0}: no run reports found")]
    NoReports(PathBuf),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}
