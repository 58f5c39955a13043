use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{IoError, PolicyError};
use crate::policy::sampling::{generate_beam, generate_sample, DistributionError, TacticDistribution};
use crate::policy::{Decoding, GenerateParams, Policy};
use crate::search::{ProofState, TacticCandidate};

/// Lookup-table policy: state text -> tactic distribution, with an optional
/// uniform fallback for unknown states.
///
/// Immutable once built, so one instance can serve any number of searches.
#[derive(Debug, Clone, Default)]
pub struct TabularPolicy {
    table: BTreeMap<String, TacticDistribution>,
    fallback: Option<TacticDistribution>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FileEntry {
    tactic: String,
    prob: f64,
}

impl TabularPolicy {
    pub fn new() -> Self {
        Self::default()
    }

    /// Policy with an empty table that answers every state uniformly.
    pub fn uniform<S: AsRef<str>>(vocabulary: &[S]) -> Result<Self, DistributionError> {
        Ok(TabularPolicy {
            table: BTreeMap::new(),
            fallback: Some(TacticDistribution::uniform(vocabulary)?),
        })
    }

    pub fn with_fallback<S: AsRef<str>>(mut self, vocabulary: &[S]) -> Result<Self, DistributionError> {
        self.fallback = Some(TacticDistribution::uniform(vocabulary)?);
        Ok(self)
    }

    /// Adds (or replaces) the distribution for `state`. Weights are normalized.
    pub fn insert<S: Into<String>>(
        &mut self,
        state: impl Into<String>,
        weights: impl IntoIterator<Item = (S, f64)>,
    ) -> Result<(), DistributionError> {
        self.table
            .insert(state.into(), TacticDistribution::from_weights(weights)?);
        Ok(())
    }

    pub fn distribution(&self, state: &str) -> Option<&TacticDistribution> {
        self.table.get(state).or(self.fallback.as_ref())
    }

    pub fn states(&self) -> impl Iterator<Item = &str> {
        self.table.keys().map(String::as_str)
    }

    /// Rewrites every table key, e.g. to canonicalize goal text.
    pub fn map_keys(self, f: impl Fn(&str) -> String) -> Self {
        TabularPolicy {
            table: self.table.into_iter().map(|(k, v)| (f(&k), v)).collect(),
            fallback: self.fallback,
        }
    }

    /// Parses `{"<state>": [{"tactic": .., "prob": ..}, ..], ..}`.
    pub fn from_json(text: &str) -> Result<Self, String> {
        let raw: BTreeMap<String, Vec<FileEntry>> =
            serde_json::from_str(text).map_err(|e| e.to_string())?;
        let mut policy = TabularPolicy::new();
        for (state, entries) in raw {
            policy
                .insert(state.clone(), entries.into_iter().map(|e| (e.tactic, e.prob)))
                .map_err(|e| format!("state `{state}`: {e}"))?;
        }
        Ok(policy)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
        Self::from_json(&text).map_err(|e| {
            IoError::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, e))
        })
    }

    pub fn to_json(&self) -> String {
        let raw: BTreeMap<&str, Vec<FileEntry>> = self
            .table
            .iter()
            .map(|(s, d)| {
                let entries = d
                    .entries()
                    .iter()
                    .map(|(t, l)| FileEntry {
                        tactic: t.clone(),
                        prob: l.exp(),
                    })
                    .collect();
                (s.as_str(), entries)
            })
            .collect();
        serde_json::to_string_pretty(&raw).expect("policy table serializes")
    }

    /// Multiplies the probability of `tactic` at `state` by `factor` and
    /// renormalizes. Desk-scale stand-in for a training step; not a model update.
    pub fn reweight(&mut self, state: &str, tactic: &str, factor: f64) {
        let Some(current) = self.distribution(state).cloned() else {
            return;
        };
        if current.logprob(tactic).is_none() {
            return;
        }
        let weights = current.entries().iter().map(|(t, l)| {
            let p = l.exp();
            (t.clone(), if t == tactic { p * factor } else { p })
        });
        if let Ok(d) = TacticDistribution::from_weights(weights) {
            self.table.insert(state.to_string(), d);
        }
    }
}

impl Policy for TabularPolicy {
    fn generate(
        &self,
        state: &ProofState,
        params: &GenerateParams,
    ) -> Result<Vec<TacticCandidate>, PolicyError> {
        let Some(dist) = self.distribution(state.text()) else {
            return Ok(Vec::new());
        };
        Ok(match params.decoding {
            Decoding::Beam => generate_beam(dist, params.width),
            Decoding::Sample {
                temperature,
                top_p,
                seed,
            } => generate_sample(dist, params.width, temperature, top_p, seed),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn beam(width: usize) -> GenerateParams {
        GenerateParams {
            width,
            decoding: Decoding::Beam,
            timeout: Duration::from_secs(1),
        }
    }

    #[test]
    fn unknown_state_without_fallback_is_a_dead_end() {
        let p = TabularPolicy::new();
        assert!(p.generate(&ProofState::new("x"), &beam(3)).unwrap().is_empty());
    }

    #[test]
    fn fallback_is_uniform_over_vocabulary() {
        let p = TabularPolicy::uniform(&["b", "a", "c"]).unwrap();
        let out = p.generate(&ProofState::new("anything"), &beam(5)).unwrap();
        let names: Vec<_> = out.iter().map(|c| c.tactic.as_str()).collect();
        assert_eq!(names, ["a", "b", "c"]);
        for c in out {
            assert!((c.logprob - (1.0f64 / 3.0).ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn json_table_loads_and_normalizes() {
        let p = TabularPolicy::from_json(
            r#"{"Z = Z": [{"tactic": "refl", "prob": 3}, {"tactic": "rw_l add_zero", "prob": 1}]}"#,
        )
        .unwrap();
        let d = p.distribution("Z = Z").unwrap();
        assert!(d.is_normalized());
        assert!((d.logprob("refl").unwrap() - 0.75f64.ln()).abs() < 1e-15);
        let again = TabularPolicy::from_json(&p.to_json()).unwrap();
        let d2 = again.distribution("Z = Z").unwrap();
        assert!((d2.logprob("refl").unwrap() - 0.75f64.ln()).abs() < 1e-12);
        assert!(TabularPolicy::from_json(r#"{"s": [{"tactic": "a", "prob": -1}]}"#).is_err());
    }

    #[test]
    fn reweight_moves_mass_away() {
        let mut p = TabularPolicy::new();
        p.insert("s", [("good", 0.5), ("bad", 0.5)]).unwrap();
        p.reweight("s", "bad", 0.5);
        let d = p.distribution("s").unwrap();
        assert!((d.logprob("good").unwrap().exp() - 2.0 / 3.0).abs() < 1e-12);
    }
}
