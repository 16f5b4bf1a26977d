use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("subcommand {command} does not match the configuration for {config}")]
    CommandMismatch { command: String, config: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: dkg_core::Error,
    },
    #[error("thread pool: {0}")]
    Threads(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Json(_) => "json",
            Self::Config(_) => "config",
            Self::CommandMismatch { .. } => "usage",
            Self::Io { .. } => "io",
            Self::Numerical { .. } => "numerical",
            Self::Threads(_) => "threads",
        }
    }

    /// Machine-readable form written to `error.json`.
    pub fn record(&self) -> ErrorRecord {
        ErrorRecord {
            status: "error",
            kind: self.kind(),
            message: self.to_string(),
            violations: match self {
                Self::Config(list) => list.clone(),
                _ => Vec::new(),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorRecord {
    pub status: &'static str,
    pub kind: &'static str,
    pub message: String,
    pub violations: Vec<String>,
}

pub(crate) trait NumericalContext<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError>;
}

impl<T> NumericalContext<T> for dkg_core::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError> {
        self.map_err(|source| CliError::Numerical {
            context: what(),
            source,
        })
    }
}
