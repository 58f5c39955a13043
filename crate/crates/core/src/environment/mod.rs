//! Proof environments: apply a tactic to a proof state and report the outcome.

pub mod corpus;
pub mod oracle;
pub mod peano;
pub mod remote;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::EnvError;
use crate::search::ProofState;

pub use peano::PeanoEnvironment;

/// Stable error strings. Dataset extraction and golden files key on them.
pub mod messages {
    pub const REFL_FAILED: &str = "refl failed";
    pub const RULE_NOT_APPLICABLE: &str = "rule not applicable";
    pub const UNKNOWN_TACTIC: &str = "unknown tactic";
    pub const MALFORMED_STATE: &str = "malformed state";
    pub const TIMEOUT: &str = "timeout";
    pub const DUPLICATE: &str = "duplicate";
}

/// Result of applying one tactic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnvOutcome {
    NewState(ProofState),
    ProofFinished,
    TacticError(String),
}

/// A proof environment.
///
/// Implementations must be shareable between concurrent searches. Remote
/// implementations enforce `timeout` themselves and report an elapsed
/// deadline as `TacticError("timeout")`.
pub trait Environment: Send + Sync {
    /// Validates a goal and returns its canonical root state.
    fn init(&self, goal: &str) -> Result<ProofState, EnvError>;

    fn apply(
        &self,
        state: &ProofState,
        tactic: &str,
        timeout: Duration,
    ) -> Result<EnvOutcome, EnvError>;

    /// Tactic vocabulary, when the environment has a closed one.
    fn vocabulary(&self) -> Vec<String> {
        Vec::new()
    }
}

impl<E: Environment + ?Sized> Environment for std::sync::Arc<E> {
    fn init(&self, goal: &str) -> Result<ProofState, EnvError> {
        (**self).init(goal)
    }

    fn apply(
        &self,
        state: &ProofState,
        tactic: &str,
        timeout: Duration,
    ) -> Result<EnvOutcome, EnvError> {
        (**self).apply(state, tactic, timeout)
    }

    fn vocabulary(&self) -> Vec<String> {
        (**self).vocabulary()
    }
}
