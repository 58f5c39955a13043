//! Named configurations with the published hyperparameters.
//!
//! `paper-eval` is the evaluation search setting; `paper-collect` the expert
//! iteration setting. Values not published (evaluation nucleus, expansion cap
//! during collection) are marked below.

use serde::{Deserialize, Serialize};

use crate::expert::{CollectConfig, FilterConfig};
use crate::policy::Decoding;
use crate::search::SearchConfig;

pub const PAPER_EVAL: &str = "paper-eval";
pub const PAPER_COLLECT: &str = "paper-collect";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPreset {
    pub search: SearchConfig,
    /// K in the K × W × N budget.
    pub passes: usize,
    /// Intermediate pass counts reported on the scaling curve.
    pub k_values: Vec<usize>,
    /// α values whose solve sets are unioned for the accumulative score.
    pub accumulative_alphas: Vec<f64>,
}

impl EvalPreset {
    pub fn with_alpha(&self, alpha: f64) -> SearchConfig {
        SearchConfig {
            alpha,
            ..self.search.clone()
        }
    }

    pub fn tactic_budget(&self) -> usize {
        self.passes * self.search.width * self.search.max_expansions
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectPreset {
    pub filter: FilterConfig,
    pub temperature: f64,
    pub top_p: f64,
    pub widths: Vec<usize>,
    pub alpha: f64,
    pub max_expansions: usize,
    /// KL weight of the preference loss.
    pub dpo_beta: f64,
}

impl CollectPreset {
    /// Collection settings for one of the sampling widths.
    pub fn collect_config(&self, width: usize, seed: u64) -> CollectConfig {
        CollectConfig {
            width,
            temperature: self.temperature,
            top_p: self.top_p,
            max_expansions: self.max_expansions,
            alpha: self.alpha,
            seed,
            ..CollectConfig::default()
        }
    }
}

pub fn paper_eval() -> EvalPreset {
    EvalPreset {
        search: SearchConfig {
            alpha: 0.5,
            width: 2,
            max_expansions: 600,
            decoding: Decoding::Sample {
                temperature: 1.1,
                // not published for evaluation; the collection value is reused
                top_p: 1.0,
                seed: 0,
            },
            ..SearchConfig::default()
        },
        passes: 2048,
        k_values: vec![64, 128, 256, 1024, 2048],
        accumulative_alphas: vec![0.0, 0.5, 1.0],
    }
}

pub fn paper_collect() -> CollectPreset {
    CollectPreset {
        filter: FilterConfig {
            beam_width: 32,
            alpha: 0.0,
            ..FilterConfig::default()
        },
        temperature: 1.0,
        top_p: 1.0,
        widths: vec![2, 4, 8],
        alpha: 0.0,
        // not published for collection; the evaluation cap is reused
        max_expansions: 600,
        dpo_beta: 10.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Eval(EvalPreset),
    Collect(CollectPreset),
}

pub fn by_name(name: &str) -> Option<Preset> {
    match name {
        PAPER_EVAL => Some(Preset::Eval(paper_eval())),
        PAPER_COLLECT => Some(Preset::Collect(paper_collect())),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_by_name() {
        assert!(matches!(by_name("paper-eval"), Some(Preset::Eval(_))));
        assert!(matches!(by_name("paper-collect"), Some(Preset::Collect(_))));
        assert!(by_name("other").is_none());
    }

    #[test]
    fn eval_budget_is_2048_by_2_by_600() {
        assert_eq!(paper_eval().tactic_budget(), 2048 * 2 * 600);
        paper_eval().search.validate().unwrap();
    }

    #[test]
    fn collect_configs_use_sampling_widths() {
        let p = paper_collect();
        let widths: Vec<usize> = p.widths.iter().map(|&w| p.collect_config(w, 0).width).collect();
        assert_eq!(widths, [2, 4, 8]);
    }
}
