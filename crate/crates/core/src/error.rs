use std::path::PathBuf;

use thiserror::Error;

/// Failures of an environment backend that are not tactic errors.
///
/// Tactic failures (including per-tactic timeouts) are ordinary
/// [`EnvOutcome::TacticError`](crate::environment::EnvOutcome) values; this
/// type is reserved for infrastructure problems that should abort a search.
#[derive(Debug, Error)]
pub enum EnvError {
    #[error("environment transport failure: {0}")]
    Transport(String),
    #[error("malformed environment reply: {0}")]
    Protocol(String),
    #[error("goal rejected by environment: {0}")]
    GoalRejected(String),
}

#[derive(Debug, Error)]
pub enum PolicyError {
    /// The generation deadline elapsed; the expansion becomes a dead end.
    #[error("tactic generation timed out")]
    Timeout,
    /// The server answered with an explicit error object; treated as a dead end.
    #[error("policy server error: {0}")]
    Server(String),
    #[error("policy transport failure: {0}")]
    Transport(String),
    #[error("malformed policy response: {0}")]
    Protocol(String),
}

impl PolicyError {
    /// Whether the error should abort the search rather than end one expansion.
    pub fn is_infrastructure(&self) -> bool {
        matches!(self, PolicyError::Transport(_) | PolicyError::Protocol(_))
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Environment(#[from] EnvError),
    #[error(transparent)]
    Policy(PolicyError),
}

/// Errors from dataset, report and plot files.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

impl IoError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.into(),
            source,
        }
    }
}
