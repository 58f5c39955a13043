//! Post-processing of campaign reports and datasets: pass@K curves with
//! min–max bands, unions across configurations, proof-length and tactic-length
//! distributions, and their CSV/SVG renderings.

pub mod plot;
pub mod stats;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::orchestrator::CampaignReport;

pub use stats::{
    lengths_from_examples, proof_length_stats, tactic_token_stats, token_count, LengthHistogram,
    TokenHistogram, TOKEN_BINS,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("no reports given")]
    NoReports,
    #[error("no k values given")]
    NoKValues,
    #[error("k must be positive")]
    ZeroK,
    #[error("report {index} covers a different theorem set than report 0")]
    TheoremSetMismatch { index: usize },
    #[error("no data in any round")]
    NoData,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassAtKReport {
    pub theorems: usize,
    pub k_values: Vec<usize>,
    pub solve_rate: Vec<f64>,
    /// `None` when the records cannot support a resample at that k.
    pub bands: Vec<Option<Band>>,
}

impl PassAtKReport {
    pub fn rate(&self, k: usize) -> Option<f64> {
        self.k_values
            .iter()
            .position(|&x| x == k)
            .map(|i| self.solve_rate[i])
    }

    /// Solve rates never decrease as k grows.
    pub fn is_monotone(&self) -> bool {
        let mut pairs: Vec<(usize, f64)> = self
            .k_values
            .iter()
            .copied()
            .zip(self.solve_rate.iter().copied())
            .collect();
        pairs.sort_by_key(|p| p.0);
        pairs.windows(2).all(|w| w[0].1 <= w[1].1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandOptions {
    /// Passes per resampled block.
    pub block_size: usize,
    pub resamples: usize,
    pub seed: u64,
}

impl Default for BandOptions {
    fn default() -> Self {
        BandOptions {
            block_size: 64,
            resamples: 200,
            seed: 0,
        }
    }
}

/// Per theorem, the outcomes of its counted passes, with the passes of later
/// reports appended after earlier ones. Theorems are ordered by id.
fn outcome_table(reports: &[CampaignReport]) -> Result<BTreeMap<String, Vec<bool>>, EvalError> {
    let first = reports.first().ok_or(EvalError::NoReports)?;
    let ids: BTreeSet<&str> = first.theorems.iter().map(|t| t.id.as_str()).collect();
    let mut table: BTreeMap<String, Vec<bool>> = BTreeMap::new();
    for (index, r) in reports.iter().enumerate() {
        let these: BTreeSet<&str> = r.theorems.iter().map(|t| t.id.as_str()).collect();
        if these != ids || these.len() != r.theorems.len() {
            return Err(EvalError::TheoremSetMismatch { index });
        }
        for t in &r.theorems {
            table
                .entry(t.id.clone())
                .or_default()
                .extend(t.counted_outcomes());
        }
    }
    Ok(table)
}

fn rate_over<'a>(rows: impl Iterator<Item = &'a [bool]>, theorems: usize) -> f64 {
    let solved = rows.filter(|r| r.iter().any(|&x| x)).count();
    solved as f64 / theorems as f64
}

/// Fraction of theorems proved within their first k passes, for each k, with
/// bands from resampled blocks of passes.
///
/// A band at k draws `ceil(k / block_size)` distinct blocks without
/// replacement, concatenates them in drawn order and scores the first k
/// passes; the band is the min and max over `resamples` draws. Bands need
/// every theorem to have the same number of recorded passes (no early stop,
/// no infrastructure failures) and enough blocks; otherwise they are `None`.
pub fn pass_at_k(
    reports: &[CampaignReport],
    k_values: &[usize],
    options: &BandOptions,
) -> Result<PassAtKReport, EvalError> {
    if k_values.is_empty() {
        return Err(EvalError::NoKValues);
    }
    if k_values.contains(&0) {
        return Err(EvalError::ZeroK);
    }
    let table = outcome_table(reports)?;
    let n = table.len();
    let rows: Vec<&[bool]> = table.values().map(Vec::as_slice).collect();
    let solve_rate = k_values
        .iter()
        .map(|&k| {
            if n == 0 {
                0.0
            } else {
                rate_over(rows.iter().map(|r| &r[..k.min(r.len())]), n)
            }
        })
        .collect();

    let full_len = rows.first().map_or(0, |r| r.len());
    let complete = n > 0 && options.block_size > 0 && rows.iter().all(|r| r.len() == full_len);
    let blocks = if complete { full_len / options.block_size } else { 0 };
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let bands = k_values
        .iter()
        .map(|&k| {
            let need = k.div_ceil(options.block_size.max(1));
            if !complete || need > blocks || options.resamples == 0 {
                return None;
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let mut scratch = Vec::with_capacity(need * options.block_size);
            for _ in 0..options.resamples {
                let picked = sample(&mut rng, blocks, need);
                let solved = rows
                    .iter()
                    .filter(|r| {
                        scratch.clear();
                        for b in picked.iter() {
                            scratch.extend_from_slice(&r[b * options.block_size..(b + 1) * options.block_size]);
                        }
                        scratch[..k].iter().any(|&x| x)
                    })
                    .count();
                let rate = solved as f64 / n as f64;
                lo = lo.min(rate);
                hi = hi.max(rate);
            }
            Some(Band { min: lo, max: hi })
        })
        .collect();

    Ok(PassAtKReport {
        theorems: n,
        k_values: k_values.to_vec(),
        solve_rate,
        bands,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnionReport {
    pub theorems: usize,
    /// Per input report, the fraction of all theorems it proved.
    pub rates: Vec<f64>,
    pub proved: Vec<String>,
    pub rate: f64,
}

/// Union of the proved sets of several reports (e.g. one per α). The
/// denominator is the union of their theorem sets.
pub fn accumulative_union(reports: &[CampaignReport]) -> Result<UnionReport, EvalError> {
    if reports.is_empty() {
        return Err(EvalError::NoReports);
    }
    let all: BTreeSet<&str> = reports
        .iter()
        .flat_map(|r| r.theorems.iter().map(|t| t.id.as_str()))
        .collect();
    let n = all.len().max(1) as f64;
    let mut proved = BTreeSet::new();
    let rates = reports
        .iter()
        .map(|r| {
            let ids = r.proved_ids();
            let count = ids.iter().collect::<BTreeSet<_>>().len();
            proved.extend(ids);
            count as f64 / n
        })
        .collect();
    Ok(UnionReport {
        theorems: all.len(),
        rates,
        rate: proved.len() as f64 / n,
        proved: proved.into_iter().map(str::to_string).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orchestrator::{
        BudgetLedger, CampaignSettings, PassRecord, PassStatus, TheoremRecord,
    };
    use crate::search::SearchConfig;
    use proptest::prelude::*;

    pub(crate) fn report(rows: &[(&str, &[bool])]) -> CampaignReport {
        let theorems = rows
            .iter()
            .map(|(id, outcomes)| {
                let passes: Vec<PassRecord> = outcomes
                    .iter()
                    .enumerate()
                    .map(|(i, &ok)| PassRecord {
                        pass: i,
                        seed: 0,
                        status: if ok { PassStatus::Proved } else { PassStatus::Unproved },
                        generation_calls: 1,
                        tactics_requested: 1,
                        generation_timeouts: 0,
                        proof: None,
                        error: None,
                    })
                    .collect();
                let solved_at = outcomes.iter().position(|&x| x);
                TheoremRecord {
                    id: id.to_string(),
                    goal: String::new(),
                    proved: solved_at.is_some(),
                    solved_at,
                    proof: None,
                    deadline_exceeded: false,
                    passes,
                }
            })
            .collect();
        CampaignReport {
            settings: CampaignSettings::default(),
            search: SearchConfig::default(),
            shard_index: 0,
            shard_count: 1,
            theorems,
            ledger: BudgetLedger::default(),
        }
    }

    #[test]
    fn all_first_pass_gives_one_everywhere() {
        let r = report(&[("a", &[true]), ("b", &[true])]);
        let p = pass_at_k(&[r], &[1, 4, 64], &BandOptions::default()).unwrap();
        assert_eq!(p.solve_rate, [1.0, 1.0, 1.0]);
    }

    #[test]
    fn rates_count_first_k_passes() {
        let r = report(&[("a", &[false, true, false, false]), ("b", &[false; 4]), ("c", &[true, false, false, false])]);
        let p = pass_at_k(&[r], &[1, 2, 4], &BandOptions::default()).unwrap();
        assert_eq!(p.solve_rate, [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0]);
        assert!(p.is_monotone());
    }

    #[test]
    fn reports_concatenate_passes() {
        let a = report(&[("x", &[false]), ("y", &[false])]);
        let b = report(&[("y", &[true]), ("x", &[false])]);
        let p = pass_at_k(&[a, b], &[1, 2], &BandOptions::default()).unwrap();
        assert_eq!(p.solve_rate, [0.0, 0.5]);
    }

    #[test]
    fn mismatched_theorems_are_rejected() {
        let a = report(&[("x", &[false])]);
        let b = report(&[("z", &[true])]);
        assert_eq!(
            pass_at_k(&[a, b], &[1], &BandOptions::default()),
            Err(EvalError::TheoremSetMismatch { index: 1 })
        );
        assert_eq!(pass_at_k(&[], &[1], &BandOptions::default()), Err(EvalError::NoReports));
        let c = report(&[("x", &[false])]);
        assert_eq!(pass_at_k(&[c], &[], &BandOptions::default()), Err(EvalError::NoKValues));
    }

    #[test]
    fn bands_bracket_block_rates() {
        // Block 0 solves "a", block 1 solves nothing.
        let mut a = vec![false; 8];
        a[1] = true;
        let b = vec![false; 8];
        let r = report(&[("a", &a), ("b", &b)]);
        let opts = BandOptions {
            block_size: 4,
            resamples: 50,
            seed: 1,
        };
        let p = pass_at_k(&[r], &[2, 4, 8, 16], &opts).unwrap();
        assert_eq!(p.bands[0], Some(Band { min: 0.0, max: 0.5 }));
        assert_eq!(p.bands[1], Some(Band { min: 0.0, max: 0.5 }));
        assert_eq!(p.bands[2], Some(Band { min: 0.5, max: 0.5 }));
        assert_eq!(p.bands[3], None);
    }

    #[test]
    fn early_stopped_records_have_no_bands() {
        let r = report(&[("a", &[true]), ("b", &[false, false])]);
        let p = pass_at_k(&[r], &[1], &BandOptions { block_size: 1, ..BandOptions::default() }).unwrap();
        assert_eq!(p.bands, [None]);
    }

    #[test]
    fn union_arithmetic() {
        let ids: Vec<String> = (0..10).map(|i| format!("t{i}")).collect();
        let make = |solved: &[usize]| {
            let rows: Vec<(&str, Vec<bool>)> = ids
                .iter()
                .enumerate()
                .map(|(i, id)| (id.as_str(), vec![solved.contains(&i)]))
                .collect();
            let rows: Vec<(&str, &[bool])> = rows.iter().map(|(a, b)| (*a, b.as_slice())).collect();
            report(&rows)
        };
        let a = make(&[0, 1, 2]);
        let b = make(&[3, 4, 5, 6]);
        let u = accumulative_union(&[a.clone(), b]).unwrap();
        assert!((u.rate - 0.7).abs() < 1e-15);
        let same = accumulative_union(&[a.clone(), a.clone()]).unwrap();
        assert_eq!(same.proved, accumulative_union(&[a]).unwrap().proved);
    }

    fn arb_rows() -> impl Strategy<Value = Vec<Vec<bool>>> {
        (1usize..12, 1usize..20).prop_flat_map(|(t, k)| {
            proptest::collection::vec(proptest::collection::vec(any::<bool>(), k), t)
        })
    }

    proptest! {
        #[test]
        fn pass_at_k_is_monotone(rows in arb_rows(), ks in proptest::collection::vec(1usize..40, 1..8)) {
            let ids: Vec<String> = (0..rows.len()).map(|i| format!("t{i}")).collect();
            let pairs: Vec<(&str, &[bool])> = ids.iter().map(String::as_str).zip(rows.iter().map(Vec::as_slice)).collect();
            let p = pass_at_k(&[report(&pairs)], &ks, &BandOptions { block_size: 4, resamples: 5, seed: 0 }).unwrap();
            prop_assert!(p.is_monotone());
        }

        #[test]
        fn union_dominates_members(rows in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 1..4), 1..5)) {
            let ids = ["a", "b", "c", "d"];
            let reports: Vec<CampaignReport> = rows
                .iter()
                .map(|solved| {
                    let outcomes: Vec<Vec<bool>> = ids.iter().enumerate().map(|(i, _)| vec![solved.get(i).copied().unwrap_or(false)]).collect();
                    let pairs: Vec<(&str, &[bool])> = ids.iter().copied().zip(outcomes.iter().map(Vec::as_slice)).collect();
                    report(&pairs)
                })
                .collect();
            let u = accumulative_union(&reports).unwrap();
            for r in &u.rates {
                prop_assert!(u.rate >= *r);
            }
        }
    }
}
