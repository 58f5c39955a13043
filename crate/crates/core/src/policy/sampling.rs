//! Beam and temperature/nucleus decoding over an explicit tactic distribution.

use std::cmp::Ordering;
use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::search::TacticCandidate;

/// Tolerance on the cumulative mass when cutting the nucleus.
const NUCLEUS_EPS: f64 = 1e-12;

/// Finite distribution over unique tactic strings, stored as log-probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TacticDistribution {
    entries: Vec<(String, f64)>,
    normalized: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionError(pub String);

impl std::fmt::Display for DistributionError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DistributionError {}

impl TacticDistribution {
    /// Builds a normalized distribution from non-negative weights.
    /// Zero-weight tactics are dropped.
    pub fn from_weights<S: Into<String>>(
        weights: impl IntoIterator<Item = (S, f64)>,
    ) -> Result<Self, DistributionError> {
        let weights: Vec<(String, f64)> = weights.into_iter().map(|(t, w)| (t.into(), w)).collect();
        let mut seen = HashSet::new();
        for (t, w) in &weights {
            if !seen.insert(t.as_str()) {
                return Err(DistributionError(format!("duplicate tactic `{t}`")));
            }
            if !(w.is_finite() && *w >= 0.0) {
                return Err(DistributionError(format!("invalid weight {w} for `{t}`")));
            }
        }
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        if total <= 0.0 {
            return Err(DistributionError("distribution has no mass".into()));
        }
        let entries = weights
            .into_iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(t, w)| (t, (w / total).ln().min(0.0)))
            .collect();
        Ok(TacticDistribution {
            entries,
            normalized: true,
        })
    }

    /// Uses the given log-probabilities as they are (possibly unnormalized,
    /// e.g. a truncated server response).
    pub fn from_logprobs<S: Into<String>>(
        entries: impl IntoIterator<Item = (S, f64)>,
    ) -> Result<Self, DistributionError> {
        let entries: Vec<(String, f64)> = entries.into_iter().map(|(t, l)| (t.into(), l)).collect();
        let mut seen = HashSet::new();
        for (t, l) in &entries {
            if !seen.insert(t.as_str()) {
                return Err(DistributionError(format!("duplicate tactic `{t}`")));
            }
            if !(l.is_finite() && *l <= 0.0) {
                return Err(DistributionError(format!("invalid logprob {l} for `{t}`")));
            }
        }
        let mass: f64 = entries.iter().map(|(_, l)| l.exp()).sum();
        Ok(TacticDistribution {
            normalized: (mass - 1.0).abs() <= 1e-9,
            entries,
        })
    }

    pub fn uniform<S: AsRef<str>>(vocabulary: &[S]) -> Result<Self, DistributionError> {
        Self::from_weights(vocabulary.iter().map(|t| (t.as_ref().to_string(), 1.0)))
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn logprob(&self, tactic: &str) -> Option<f64> {
        self.entries.iter().find(|(t, _)| t == tactic).map(|(_, l)| *l)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries by descending log-probability, ties by tactic text.
    pub fn ranked(&self) -> Vec<(&str, f64)> {
        let mut v: Vec<(&str, f64)> = self.entries.iter().map(|(t, l)| (t.as_str(), *l)).collect();
        v.sort_by(|a, b| rank_order(a, b));
        v
    }
}

fn rank_order(a: &(&str, f64), b: &(&str, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0))
}

/// Top-`width` tactics by log-probability, ties broken lexicographically.
pub fn generate_beam(dist: &TacticDistribution, width: usize) -> Vec<TacticCandidate> {
    dist.ranked()
        .into_iter()
        .take(width)
        .map(|(t, l)| TacticCandidate::new(t, l))
        .collect()
}

/// Length of the smallest prefix of `probs` (sorted descending, summing to 1)
/// whose mass reaches `top_p`.
pub fn nucleus(probs: &[f64], top_p: f64) -> usize {
    if top_p >= 1.0 {
        return probs.len();
    }
    let mut mass = 0.0;
    for (i, p) in probs.iter().enumerate() {
        mass += p;
        if mass + NUCLEUS_EPS >= top_p {
            return i + 1;
        }
    }
    probs.len()
}

/// Draws up to `width` distinct tactics.
///
/// The log-probabilities are divided by `temperature`, the result is cut to
/// the `top_p` nucleus and renormalized, and tactics are drawn sequentially
/// without replacement. Returned log-probabilities are the raw values from
/// `dist`. Fewer than `width` tactics come back when the nucleus is smaller.
pub fn generate_sample(
    dist: &TacticDistribution,
    width: usize,
    temperature: f64,
    top_p: f64,
    seed: u64,
) -> Vec<TacticCandidate> {
    assert!(temperature > 0.0, "temperature must be positive");
    assert!(top_p > 0.0 && top_p <= 1.0, "top_p must lie in (0, 1]");
    let ranked = dist.ranked();
    if ranked.is_empty() || width == 0 {
        return Vec::new();
    }
    let max = ranked[0].1;
    let mut weights: Vec<f64> = ranked
        .iter()
        .map(|(_, l)| ((l - max) / temperature).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let keep = nucleus(&weights, top_p);

    let mut pool: Vec<(usize, f64)> = weights[..keep].iter().copied().enumerate().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(width.min(keep));
    while out.len() < width && !pool.is_empty() {
        let remaining: f64 = pool.iter().map(|(_, w)| w).sum();
        let mut u = rng.gen::<f64>() * remaining;
        let mut pick = pool.len() - 1;
        for (i, (_, w)) in pool.iter().enumerate() {
            if u < *w {
                pick = i;
                break;
            }
            u -= w;
        }
        let (idx, _) = pool.remove(pick);
        let (t, l) = ranked[idx];
        out.push(TacticCandidate::new(t, l));
    }
    out
}
