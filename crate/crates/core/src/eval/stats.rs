//! Proof-length and tactic-length distributions per round.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::eval::EvalError;
use crate::expert::SftExample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthHistogram {
    pub round: usize,
    /// Proof length (tactic count) -> number of proofs.
    pub bins: BTreeMap<usize, usize>,
    pub count: usize,
    pub mean: f64,
}

/// One histogram per round that has proofs, in round order. `rounds` maps a
/// round to its proof lengths; empty rounds are skipped with a warning.
pub fn proof_length_stats(rounds: &BTreeMap<usize, Vec<usize>>) -> Result<Vec<LengthHistogram>, EvalError> {
    let mut out = Vec::new();
    for (&round, lengths) in rounds {
        if lengths.is_empty() {
            warn!(round, "round has no proofs; omitted");
            continue;
        }
        let mut bins = BTreeMap::new();
        for &l in lengths {
            *bins.entry(l).or_insert(0) += 1;
        }
        out.push(LengthHistogram {
            round,
            bins,
            count: lengths.len(),
            mean: lengths.iter().sum::<usize>() as f64 / lengths.len() as f64,
        });
    }
    if out.is_empty() {
        return Err(EvalError::NoData);
    }
    Ok(out)
}

/// Proof lengths per round from SFT examples that keep every step (a round's
/// examples, not the de-duplicated cumulative set): one proof per
/// `(round, statement_id)`, its length the number of steps.
pub fn lengths_from_examples(examples: &[SftExample]) -> BTreeMap<usize, Vec<usize>> {
    let mut steps: BTreeMap<(usize, &str), usize> = BTreeMap::new();
    for e in examples {
        *steps.entry((e.round, e.statement_id.as_str())).or_insert(0) += 1;
    }
    let mut rounds: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for ((round, _), n) in steps {
        rounds.entry(round).or_default().push(n);
    }
    rounds
}

/// Bin labels for tactic token counts.
pub const TOKEN_BINS: [&str; 4] = ["0", "1-10", "11-50", ">50"];

/// Whitespace-separated token count.
pub fn token_count(tactic: &str) -> usize {
    tactic.split_whitespace().count()
}

fn token_bin(tokens: usize) -> usize {
    match tokens {
        0 => 0,
        1..=10 => 1,
        11..=50 => 2,
        _ => 3,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenHistogram {
    pub round: usize,
    /// Counts per [`TOKEN_BINS`] entry.
    pub counts: [usize; 4],
    pub total: usize,
    /// Percentages per bin; they sum to 100.
    pub percent: [f64; 4],
}

impl TokenHistogram {
    /// `log10` of each percentage, `None` for empty bins.
    pub fn log_percent(&self) -> [Option<f64>; 4] {
        self.percent.map(|p| (p > 0.0).then(|| p.log10()))
    }
}

/// One histogram per round of `(round, tactic)` observations.
pub fn tactic_token_stats<'a>(
    tactics: impl IntoIterator<Item = (usize, &'a str)>,
) -> Result<Vec<TokenHistogram>, EvalError> {
    let mut counts: BTreeMap<usize, [usize; 4]> = BTreeMap::new();
    for (round, t) in tactics {
        counts.entry(round).or_default()[token_bin(token_count(t))] += 1;
    }
    if counts.is_empty() {
        return Err(EvalError::NoData);
    }
    Ok(counts
        .into_iter()
        .map(|(round, counts)| {
            let total: usize = counts.iter().sum();
            TokenHistogram {
                round,
                counts,
                total,
                percent: counts.map(|c| 100.0 * c as f64 / total as f64),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_of_three_three_six() {
        let h = proof_length_stats(&BTreeMap::from([(1, vec![3, 3, 6])])).unwrap();
        assert_eq!(h[0].mean, 4.0);
        assert_eq!(h[0].bins, BTreeMap::from([(3, 2), (6, 1)]));
    }

    #[test]
    fn single_proof_is_degenerate() {
        let h = proof_length_stats(&BTreeMap::from([(2, vec![7])])).unwrap();
        assert_eq!(h[0].bins, BTreeMap::from([(7, 1)]));
        assert_eq!(h[0].count, 1);
    }

    #[test]
    fn empty_rounds_are_omitted() {
        let h = proof_length_stats(&BTreeMap::from([(1, vec![]), (2, vec![1])])).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h[0].round, 2);
        assert_eq!(proof_length_stats(&BTreeMap::from([(1, vec![])])), Err(EvalError::NoData));
    }

    #[test]
    fn lengths_group_by_statement() {
        let ex = |round, id: &str, pos| SftExample {
            state: format!("{id}{pos}"),
            tactic: "refl".into(),
            statement_id: id.into(),
            round,
            pos,
        };
        let rows = [ex(1, "a", 0), ex(1, "a", 1), ex(1, "b", 0), ex(2, "c", 0)];
        let l = lengths_from_examples(&rows);
        assert_eq!(l, BTreeMap::from([(1, vec![2, 1]), (2, vec![1])]));
    }

    #[test]
    fn whitespace_tokens() {
        assert_eq!(token_count("refl"), 1);
        assert_eq!(token_count("rw_l  add_zero"), 2);
        assert_eq!(token_count(""), 0);
        let h = tactic_token_stats([(1, "refl"), (1, "rw_l add_zero")]).unwrap();
        assert_eq!(h[0].counts, [0, 2, 0, 0]);
        assert_eq!(h[0].percent, [0.0, 100.0, 0.0, 0.0]);
        assert_eq!(h[0].log_percent(), [None, Some(2.0), None, None]);
    }

    #[test]
    fn bins_edges() {
        let long = |n: usize| vec!["x"; n].join(" ");
        let (t10, t11, t50, t51) = (long(10), long(11), long(50), long(51));
        let h = tactic_token_stats([(0, ""), (0, t10.as_str()), (0, t11.as_str()), (0, t50.as_str()), (0, t51.as_str())]).unwrap();
        assert_eq!(h[0].counts, [1, 1, 2, 1]);
        assert!((h[0].percent.iter().sum::<f64>() - 100.0).abs() < 1e-9);
    }
}
