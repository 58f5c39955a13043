//! Direct preference optimization loss over (chosen, rejected) log-probabilities.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpoPair {
    pub policy_chosen: f64,
    pub policy_rejected: f64,
    pub ref_chosen: f64,
    pub ref_rejected: f64,
}

impl DpoPair {
    /// `r(chosen) - r(rejected)` with `r = log p_policy - log p_ref`.
    pub fn margin(&self) -> f64 {
        (self.policy_chosen - self.ref_chosen) - (self.policy_rejected - self.ref_rejected)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpoBatch {
    pub pairs: Vec<DpoPair>,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DpoError {
    #[error("empty DPO batch")]
    Empty,
    #[error("beta must be positive and finite, got {0}")]
    Beta(f64),
    #[error("pair {0} has a non-finite or positive log-probability")]
    LogProb(usize),
}

/// `ln(1 + e^x)` without overflow for large `|x|`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Mean of `-log σ(β·margin)` over the batch.
pub fn dpo_loss(batch: &DpoBatch) -> Result<f64, DpoError> {
    if batch.pairs.is_empty() {
        return Err(DpoError::Empty);
    }
    if !(batch.beta > 0.0 && batch.beta.is_finite()) {
        return Err(DpoError::Beta(batch.beta));
    }
    for (i, p) in batch.pairs.iter().enumerate() {
        let ok = [p.policy_chosen, p.policy_rejected, p.ref_chosen, p.ref_rejected]
            .iter()
            .all(|l| l.is_finite() && *l <= 0.0);
        if !ok {
            return Err(DpoError::LogProb(i));
        }
    }
    let total: f64 = batch
        .pairs
        .iter()
        .map(|p| softplus(-batch.beta * p.margin()))
        .sum();
    Ok(total / batch.pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(pw: f64, pl: f64, rw: f64, rl: f64) -> DpoPair {
        DpoPair {
            policy_chosen: pw,
            policy_rejected: pl,
            ref_chosen: rw,
            ref_rejected: rl,
        }
    }

    fn loss(pairs: Vec<DpoPair>, beta: f64) -> f64 {
        dpo_loss(&DpoBatch { pairs, beta }).unwrap()
    }

    #[test]
    fn zero_margin_is_ln2() {
        let l = loss(vec![pair(-1.0, -2.0, -1.0, -2.0)], 10.0);
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn large_negative_margin_is_finite() {
        // β·margin = -50
        let l = loss(vec![pair(-5.0, -0.0, 0.0, 0.0)], 10.0);
        assert!((l - 50.0).abs() < 1e-12);
        let l = loss(vec![pair(-100.0, 0.0, 0.0, 0.0)], 10.0);
        assert!((l - 1000.0).abs() < 1e-9);
        let l = loss(vec![pair(0.0, -100.0, 0.0, 0.0)], 10.0);
        assert!(l >= 0.0 && l < 1e-300);
    }

    #[test]
    fn invalid_batches() {
        assert_eq!(dpo_loss(&DpoBatch { pairs: vec![], beta: 1.0 }), Err(DpoError::Empty));
        assert_eq!(
            dpo_loss(&DpoBatch {
                pairs: vec![pair(0.0, 0.0, 0.0, 0.0)],
                beta: 0.0
            }),
            Err(DpoError::Beta(0.0))
        );
        assert_eq!(
            dpo_loss(&DpoBatch {
                pairs: vec![pair(0.5, 0.0, 0.0, 0.0)],
                beta: 1.0
            }),
            Err(DpoError::LogProb(0))
        );
    }
}
