//! Expert iteration: beam filtering, sampled data collection, cumulative SFT
//! data, preference tuples from tactic errors, and the DPO loss.
//!
//! One round runs [`ExpertIteration::beam_filter_round`] and then
//! [`ExpertIteration::collection_round`] on what is left. Statements solved by
//! beam search leave the corpus without contributing data; statements solved
//! by sampling contribute their proof paths to the SFT set and the tactic
//! errors next to those paths to the round's DPO set.

pub mod dataset;
pub mod dpo;
pub mod preference;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tracing::{info, warn};

use crate::environment::corpus::CorpusGoal;
use crate::environment::Environment;
use crate::error::IoError;
use crate::hashing::pass_seed;
use crate::parallel::parallel_map;
use crate::policy::{Decoding, Policy, TabularPolicy};
use crate::search::{run_search, SearchConfig, SearchOutcome, SearchResult};

pub use dataset::{emit_datasets, EmittedFiles, PreferenceTuple, SftDataset, SftExample};
pub use dpo::{dpo_loss, DpoBatch, DpoError, DpoPair};
pub use preference::{extract_preference_pairs, preference_pairs_at};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatementStatus {
    Unsolved,
    FilteredOut,
    Proved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Filter,
    Collect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Attempt {
    Proved { length: usize },
    Unproved,
    InfraFailed { message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundEvent {
    pub round: usize,
    pub phase: Phase,
    pub attempt: Attempt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub id: String,
    pub goal: String,
    pub status: StatementStatus,
    pub history: Vec<RoundEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StatusCounts {
    pub unsolved: usize,
    pub filtered_out: usize,
    pub proved: usize,
}

impl StatusCounts {
    pub fn total(&self) -> usize {
        self.unsolved + self.filtered_out + self.proved
    }
}

/// Statements under expert iteration. Status only ever leaves `Unsolved`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    statements: Vec<Statement>,
}

impl Corpus {
    pub fn new<I, S, G>(goals: I) -> Self
    where
        I: IntoIterator<Item = (S, G)>,
        S: Into<String>,
        G: Into<String>,
    {
        Corpus {
            statements: goals
                .into_iter()
                .map(|(id, goal)| Statement {
                    id: id.into(),
                    goal: goal.into(),
                    status: StatementStatus::Unsolved,
                    history: Vec::new(),
                })
                .collect(),
        }
    }

    pub fn from_corpus_goals(goals: &[CorpusGoal]) -> Self {
        Self::new(goals.iter().map(|g| (g.id.clone(), g.goal.clone())))
    }

    pub fn statements(&self) -> &[Statement] {
        &self.statements
    }

    pub fn get(&self, id: &str) -> Option<&Statement> {
        self.statements.iter().find(|s| s.id == id)
    }

    pub fn counts(&self) -> StatusCounts {
        let mut c = StatusCounts::default();
        for s in &self.statements {
            match s.status {
                StatementStatus::Unsolved => c.unsolved += 1,
                StatementStatus::FilteredOut => c.filtered_out += 1,
                StatementStatus::Proved => c.proved += 1,
            }
        }
        c
    }

    fn unsolved_indices(&self) -> Vec<usize> {
        (0..self.statements.len())
            .filter(|&i| self.statements[i].status == StatementStatus::Unsolved)
            .collect()
    }

    fn resolve(&mut self, index: usize, to: StatementStatus) {
        let s = &mut self.statements[index];
        assert_eq!(
            s.status,
            StatementStatus::Unsolved,
            "statement {} already resolved",
            s.id
        );
        s.status = to;
    }

    /// One JSON object per line: `{"id", "goal", "status", "history"}`.
    pub fn to_jsonl(&self) -> Vec<u8> {
        dataset::to_jsonl(&self.statements)
    }

    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        fs::write(path, self.to_jsonl()).map_err(|e| IoError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, IoError> {
        Ok(Corpus {
            statements: dataset::read_jsonl(path)?,
        })
    }
}

/// Per-round accounting. [`RoundReport::merge`] sums counters, so reports for
/// disjoint statement batches combine in any order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    pub searched: usize,
    pub filtered_count: usize,
    pub proved_count: usize,
    /// Proof-path steps appended this round, repeats included.
    pub sft_examples_added: usize,
    /// Of those, `(state, tactic)` pairs new to the cumulative set.
    pub sft_new_pairs: usize,
    pub preference_tuples_added: usize,
    /// Policy generation calls issued.
    pub budget_consumed: usize,
    pub tactics_requested: usize,
    pub infra_failures: usize,
}

impl RoundReport {
    pub fn merge(self, other: RoundReport) -> RoundReport {
        assert_eq!(self.round, other.round, "merging reports of different rounds");
        RoundReport {
            round: self.round,
            searched: self.searched + other.searched,
            filtered_count: self.filtered_count + other.filtered_count,
            proved_count: self.proved_count + other.proved_count,
            sft_examples_added: self.sft_examples_added + other.sft_examples_added,
            sft_new_pairs: self.sft_new_pairs + other.sft_new_pairs,
            preference_tuples_added: self.preference_tuples_added + other.preference_tuples_added,
            budget_consumed: self.budget_consumed + other.budget_consumed,
            tactics_requested: self.tactics_requested + other.tactics_requested,
            infra_failures: self.infra_failures + other.infra_failures,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub beam_width: usize,
    pub max_expansions: usize,
    pub alpha: f64,
    pub workers: usize,
    #[serde(with = "crate::search::millis", rename = "tactic_timeout_ms")]
    pub tactic_timeout: Duration,
    #[serde(with = "crate::search::millis", rename = "generate_timeout_ms")]
    pub generate_timeout: Duration,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            beam_width: 32,
            max_expansions: 600,
            alpha: 0.0,
            workers: 1,
            tactic_timeout: Duration::from_secs(10),
            generate_timeout: Duration::from_secs(30),
        }
    }
}

impl FilterConfig {
    fn search_config(&self) -> SearchConfig {
        SearchConfig {
            alpha: self.alpha,
            width: self.beam_width,
            max_expansions: self.max_expansions,
            decoding: Decoding::Beam,
            tactic_timeout: self.tactic_timeout,
            generate_timeout: self.generate_timeout,
            ..SearchConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectConfig {
    pub width: usize,
    pub temperature: f64,
    pub top_p: f64,
    pub max_expansions: usize,
    pub alpha: f64,
    pub seed: u64,
    pub workers: usize,
    #[serde(with = "crate::search::millis", rename = "tactic_timeout_ms")]
    pub tactic_timeout: Duration,
    #[serde(with = "crate::search::millis", rename = "generate_timeout_ms")]
    pub generate_timeout: Duration,
}

impl Default for CollectConfig {
    fn default() -> Self {
        CollectConfig {
            width: 4,
            temperature: 1.0,
            top_p: 1.0,
            max_expansions: 600,
            alpha: 0.0,
            seed: 0,
            workers: 1,
            tactic_timeout: Duration::from_secs(10),
            generate_timeout: Duration::from_secs(30),
        }
    }
}

impl CollectConfig {
    fn search_config(&self, seed: u64) -> SearchConfig {
        SearchConfig {
            alpha: self.alpha,
            width: self.width,
            max_expansions: self.max_expansions,
            decoding: Decoding::Sample {
                temperature: self.temperature,
                top_p: self.top_p,
                seed,
            },
            tactic_timeout: self.tactic_timeout,
            generate_timeout: self.generate_timeout,
            ..SearchConfig::default()
        }
    }
}

/// Which update the next policy would be trained with. Chosen per round by
/// the operator; the pipeline only reports the data volume behind the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingMode {
    Sft,
    Dpo,
}

/// Corpus, cumulative SFT data, per-round DPO data and round reports.
#[derive(Debug, Clone, Default)]
pub struct ExpertIteration {
    pub corpus: Corpus,
    pub sft: SftDataset,
    round_sft: BTreeMap<usize, Vec<SftExample>>,
    round_dpo: BTreeMap<usize, Vec<PreferenceTuple>>,
    reports: Vec<RoundReport>,
}

type Searched = (usize, Result<SearchResult, String>);

impl ExpertIteration {
    pub fn new(corpus: Corpus) -> Self {
        ExpertIteration {
            corpus,
            ..Default::default()
        }
    }

    pub fn reports(&self) -> &[RoundReport] {
        &self.reports
    }

    /// Every SFT example appended in `round`, repeats included.
    pub fn round_sft(&self, round: usize) -> &[SftExample] {
        self.round_sft.get(&round).map_or(&[], Vec::as_slice)
    }

    pub fn round_dpo(&self, round: usize) -> &[PreferenceTuple] {
        self.round_dpo.get(&round).map_or(&[], Vec::as_slice)
    }

    fn search_unsolved<F>(
        &self,
        policy: &dyn Policy,
        env: &dyn Environment,
        workers: usize,
        config_for: F,
    ) -> Vec<Searched>
    where
        F: Fn(&Statement) -> SearchConfig + Sync,
    {
        let targets = self.corpus.unsolved_indices();
        let statements = &self.corpus.statements;
        parallel_map(&targets, workers, |&i| {
            let st = &statements[i];
            let result = env
                .init(&st.goal)
                .map_err(|e| e.to_string())
                .and_then(|root| {
                    run_search(&root, policy, env, &config_for(st)).map_err(|e| e.to_string())
                });
            (i, result)
        })
    }

    /// Beam-searches every unsolved statement. Proved ones become
    /// `FilteredOut` and their proofs are dropped: the SFT set is untouched.
    pub fn beam_filter_round(
        &mut self,
        round: usize,
        policy: &dyn Policy,
        env: &dyn Environment,
        config: &FilterConfig,
    ) -> RoundReport {
        let search_config = config.search_config();
        let results = self.search_unsolved(policy, env, config.workers, |_| search_config.clone());
        let mut report = RoundReport {
            round,
            ..Default::default()
        };
        for (i, result) in results {
            report.searched += 1;
            let attempt = match result {
                Err(message) => {
                    warn!(statement = %self.corpus.statements[i].id, %message, "filter search failed");
                    report.infra_failures += 1;
                    Attempt::InfraFailed { message }
                }
                Ok(r) => {
                    report.budget_consumed += r.generation_calls;
                    report.tactics_requested += r.tactics_requested;
                    match r.outcome {
                        SearchOutcome::Proved(path) => {
                            report.filtered_count += 1;
                            self.corpus.resolve(i, StatementStatus::FilteredOut);
                            Attempt::Proved { length: path.len() }
                        }
                        _ => Attempt::Unproved,
                    }
                }
            };
            self.corpus.statements[i].history.push(RoundEvent {
                round,
                phase: Phase::Filter,
                attempt,
            });
        }
        info!(round, filtered = report.filtered_count, "beam filter done");
        self.record(report);
        report
    }

    /// Sample-searches every unsolved statement. Proved ones become `Proved`,
    /// their path steps join the SFT set and their error siblings this round's
    /// DPO set.
    pub fn collection_round(
        &mut self,
        round: usize,
        policy: &dyn Policy,
        env: &dyn Environment,
        config: &CollectConfig,
    ) -> RoundReport {
        let results = self.search_unsolved(policy, env, config.workers, |st| {
            config.search_config(pass_seed(&st.id, round, config.seed))
        });
        let mut report = RoundReport {
            round,
            ..Default::default()
        };
        for (i, result) in results {
            report.searched += 1;
            let id = self.corpus.statements[i].id.clone();
            let attempt = match result {
                Err(message) => {
                    warn!(statement = %id, %message, "collection search failed");
                    report.infra_failures += 1;
                    Attempt::InfraFailed { message }
                }
                Ok(r) => {
                    report.budget_consumed += r.generation_calls;
                    report.tactics_requested += r.tactics_requested;
                    match (&r.outcome, r.proved_node) {
                        (SearchOutcome::Proved(path), Some(leaf)) => {
                            report.proved_count += 1;
                            for (pos, step) in path.steps.iter().enumerate() {
                                let ex = SftExample {
                                    state: step.state.text().to_string(),
                                    tactic: step.tactic.tactic.clone(),
                                    statement_id: id.clone(),
                                    round,
                                    pos,
                                };
                                report.sft_examples_added += 1;
                                if self.sft.push(ex.clone()) {
                                    report.sft_new_pairs += 1;
                                }
                                self.round_sft.entry(round).or_default().push(ex);
                            }
                            let tuples = preference_pairs_at(&r.tree, leaf, round);
                            report.preference_tuples_added += tuples.len();
                            self.round_dpo.entry(round).or_default().extend(tuples);
                            self.corpus.resolve(i, StatementStatus::Proved);
                            Attempt::Proved { length: path.len() }
                        }
                        _ => Attempt::Unproved,
                    }
                }
            };
            self.corpus.statements[i].history.push(RoundEvent {
                round,
                phase: Phase::Collect,
                attempt,
            });
        }
        info!(
            round,
            proved = report.proved_count,
            sft = report.sft_examples_added,
            dpo = report.preference_tuples_added,
            "collection done"
        );
        self.record(report);
        report
    }

    fn record(&mut self, report: RoundReport) {
        match self.reports.iter_mut().find(|r| r.round == report.round) {
            Some(existing) => *existing = existing.merge(report),
            None => self.reports.push(report),
        }
    }

    /// Writes the cumulative SFT file, `round`'s DPO file and `round`'s full
    /// SFT examples (repeats kept, for proof-length statistics) into `dir`.
    pub fn emit(&self, dir: &Path, round: usize) -> Result<EmittedFiles, IoError> {
        let files = emit_datasets(dir, &self.sft, round, self.round_dpo(round))?;
        dataset::write_jsonl(&dir.join(dataset::sft_round_file_name(round)), self.round_sft(round))?;
        if files.dpo.is_none() {
            info!(round, "no preference tuples this round; no DPO file written");
        }
        Ok(files)
    }

    /// Desk-scale stand-in for retraining: nudges a tabular policy towards
    /// the round's proof tactics (SFT) or away from its rejected tactics
    /// (DPO). It edits a lookup table; no model is trained.
    pub fn simulate_policy_update(
        &self,
        policy: &mut TabularPolicy,
        round: usize,
        mode: TrainingMode,
        factor: f64,
    ) {
        match mode {
            TrainingMode::Sft => {
                for ex in self.round_sft(round) {
                    policy.reweight(&ex.state, &ex.tactic, factor);
                }
            }
            TrainingMode::Dpo => {
                for t in self.round_dpo(round) {
                    policy.reweight(&t.state, &t.rejected, 1.0 / factor);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::peano::vocabulary;
    use crate::environment::PeanoEnvironment;

    fn uniform() -> TabularPolicy {
        TabularPolicy::uniform(&vocabulary()).unwrap()
    }

    #[test]
    fn filter_discards_easy_proofs() {
        let mut ei = ExpertIteration::new(Corpus::new([("a", "Z = Z"), ("b", "Z = S(Z)")]));
        let before = ei.sft.fingerprint();
        let cfg = FilterConfig {
            beam_width: 1,
            max_expansions: 10,
            ..FilterConfig::default()
        };
        let r = ei.beam_filter_round(1, &uniform(), &PeanoEnvironment, &cfg);
        assert_eq!(r.filtered_count, 1);
        assert_eq!(r.sft_examples_added, 0);
        assert_eq!(ei.sft.fingerprint(), before);
        assert_eq!(ei.corpus.get("a").unwrap().status, StatementStatus::FilteredOut);
        assert_eq!(ei.corpus.get("b").unwrap().status, StatementStatus::Unsolved);
    }

    #[test]
    fn collection_appends_one_example_per_step() {
        let mut ei = ExpertIteration::new(Corpus::new([("g", "add(S(Z),Z) = S(Z)")]));
        let cfg = CollectConfig {
            width: 5,
            max_expansions: 200,
            ..CollectConfig::default()
        };
        let r = ei.collection_round(1, &uniform(), &PeanoEnvironment, &cfg);
        assert_eq!(r.proved_count, 1);
        let len = match &ei.corpus.get("g").unwrap().history[0].attempt {
            Attempt::Proved { length } => *length,
            other => panic!("{other:?}"),
        };
        assert_eq!(r.sft_examples_added, len);
        assert_eq!(ei.round_sft(1).len(), len);
        assert!(ei.round_sft(1).iter().enumerate().all(|(i, e)| e.pos == i));
        // every tuple's state is covered by a same-round example with the chosen tactic
        for t in ei.round_dpo(1) {
            assert!(ei
                .round_sft(1)
                .iter()
                .any(|e| e.state == t.state && e.tactic == t.chosen));
        }
    }

    #[test]
    fn statuses_only_leave_unsolved() {
        let mut c = Corpus::new([("a", "Z = Z")]);
        c.resolve(0, StatementStatus::Proved);
        let r = std::panic::catch_unwind(move || c.resolve(0, StatementStatus::FilteredOut));
        assert!(r.is_err());
    }

    #[test]
    fn report_merge_is_order_independent() {
        let a = RoundReport {
            round: 2,
            searched: 3,
            proved_count: 1,
            budget_consumed: 40,
            ..Default::default()
        };
        let b = RoundReport {
            round: 2,
            searched: 5,
            filtered_count: 2,
            budget_consumed: 7,
            ..Default::default()
        };
        let c = RoundReport {
            round: 2,
            infra_failures: 1,
            ..Default::default()
        };
        assert_eq!(a.merge(b), b.merge(a));
        assert_eq!(a.merge(b).merge(c), a.merge(b.merge(c)));
    }

    #[test]
    fn zero_proof_round_writes_no_dpo_file() {
        let mut ei = ExpertIteration::new(Corpus::new([("x", "Z = S(Z)")]));
        ei.collection_round(1, &uniform(), &PeanoEnvironment, &CollectConfig::default());
        let dir = tempfile::tempdir().unwrap();
        let files = ei.emit(dir.path(), 1).unwrap();
        assert!(files.dpo.is_none());
        assert_eq!(fs::read_to_string(files.sft).unwrap(), "");
    }

    #[test]
    fn simulated_dpo_update_lowers_rejected_mass() {
        let mut ei = ExpertIteration::new(Corpus::new([("g", "add(S(Z),Z) = S(Z)")]));
        let cfg = CollectConfig {
            width: 5,
            max_expansions: 200,
            ..CollectConfig::default()
        };
        ei.collection_round(1, &uniform(), &PeanoEnvironment, &cfg);
        let t = ei.round_dpo(1).first().expect("root has error siblings").clone();
        let mut policy = uniform();
        let before = policy.distribution(&t.state).unwrap().logprob(&t.rejected).unwrap();
        ei.simulate_policy_update(&mut policy, 1, TrainingMode::Dpo, 2.0);
        let after = policy.distribution(&t.state).unwrap().logprob(&t.rejected).unwrap();
        assert!(after < before);
    }
}
