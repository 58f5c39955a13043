//! Tactic generation backends.

pub mod remote;
pub mod sampling;
pub mod tabular;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::PolicyError;
use crate::search::{ProofState, TacticCandidate};

pub use sampling::{generate_beam, generate_sample, nucleus, TacticDistribution};
pub use tabular::TabularPolicy;

/// How tactics are drawn from the model distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoding {
    /// Deterministic top-`width` by log-probability.
    Beam,
    /// Temperature + nucleus sampling without replacement.
    Sample {
        temperature: f64,
        top_p: f64,
        seed: u64,
    },
}

impl Decoding {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            Decoding::Beam => Ok(()),
            Decoding::Sample {
                temperature, top_p, ..
            } => {
                if !(temperature > 0.0 && temperature.is_finite()) {
                    return Err(format!("temperature must be positive, got {temperature}"));
                }
                if !(top_p > 0.0 && top_p <= 1.0) {
                    return Err(format!("top_p must lie in (0, 1], got {top_p}"));
                }
                Ok(())
            }
        }
    }

    /// Same decoding with the sampling seed replaced.
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            Decoding::Beam => Decoding::Beam,
            Decoding::Sample {
                temperature, top_p, ..
            } => Decoding::Sample {
                temperature,
                top_p,
                seed,
            },
        }
    }
}

/// One expansion's worth of generation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerateParams {
    pub width: usize,
    pub decoding: Decoding,
    pub timeout: Duration,
}

/// A tactic generator.
///
/// Must accept concurrent calls from many searches. Returned log-probabilities
/// are raw model values, independent of temperature and nucleus truncation.
pub trait Policy: Send + Sync {
    fn generate(
        &self,
        state: &ProofState,
        params: &GenerateParams,
    ) -> Result<Vec<TacticCandidate>, PolicyError>;
}

impl<P: Policy + ?Sized> Policy for std::sync::Arc<P> {
    fn generate(
        &self,
        state: &ProofState,
        params: &GenerateParams,
    ) -> Result<Vec<TacticCandidate>, PolicyError> {
        (**self).generate(state, params)
    }
}

impl<P: Policy + ?Sized> Policy for &P {
    fn generate(
        &self,
        state: &ProofState,
        params: &GenerateParams,
    ) -> Result<Vec<TacticCandidate>, PolicyError> {
        (**self).generate(state, params)
    }
}
