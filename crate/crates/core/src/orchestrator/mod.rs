//! Concurrent multi-theorem search: a pool of prover workers sharing a pool of
//! policy endpoints, seeded independent passes per theorem, and an exact
//! budget ledger.
//!
//! Work is a queue of `(theorem, pass)` tasks. A theorem's next pass is only
//! queued after its previous pass came back unproved, so a campaign executes
//! the same passes with the same seeds whatever the worker count; workers only
//! change the wall-clock order in which those passes run.

pub mod config;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use crossbeam_channel::unbounded;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{debug, info, warn};

use crate::environment::Environment;
use crate::error::{PolicyError, SearchError};
use crate::hashing::pass_seed;
use crate::policy::{GenerateParams, Policy};
use crate::search::{run_search, ProofState, SearchConfig, SearchOutcome, TacticCandidate};

pub use config::{BackendFactory, CampaignConfig, EndpointSpec, EnvironmentSpec, SpecBackends};

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("invalid campaign configuration: {0}")]
    Config(String),
    #[error("backend setup failed: {0}")]
    Backend(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoolConfig {
    pub num_provers: usize,
    pub policy_endpoints: Vec<String>,
    #[serde(with = "crate::search::millis", rename = "per_tactic_timeout_ms")]
    pub per_tactic_timeout: Duration,
    #[serde(with = "crate::search::millis", rename = "per_generate_timeout_ms")]
    pub per_generate_timeout: Duration,
    /// Wall-clock limit over all passes of one theorem.
    #[serde(
        with = "crate::search::millis::option",
        rename = "per_theorem_deadline_ms",
        skip_serializing_if = "Option::is_none"
    )]
    pub per_theorem_deadline: Option<Duration>,
    pub shard_index: usize,
    pub shard_count: usize,
}

impl Default for PoolConfig {
    fn default() -> Self {
        PoolConfig {
            num_provers: 1,
            policy_endpoints: vec!["uniform".into()],
            per_tactic_timeout: Duration::from_secs(10),
            per_generate_timeout: Duration::from_secs(30),
            per_theorem_deadline: None,
            shard_index: 0,
            shard_count: 1,
        }
    }
}

impl PoolConfig {
    pub fn validate(&self) -> Result<(), OrchestratorError> {
        if self.num_provers == 0 {
            return Err(OrchestratorError::Config("num_provers must be positive".into()));
        }
        if self.policy_endpoints.is_empty() {
            return Err(OrchestratorError::Config("policy_endpoints is empty".into()));
        }
        if self.shard_index >= self.shard_count {
            return Err(OrchestratorError::Config(format!(
                "shard_index {} out of range for {} shards",
                self.shard_index, self.shard_count
            )));
        }
        Ok(())
    }
}

/// Contiguous shard `shard_index` of `shard_count`; earlier shards take the
/// remainder, so sizes differ by at most one.
pub fn shard_theorems<T: Clone>(theorems: &[T], shard_index: usize, shard_count: usize) -> Vec<T> {
    assert!(shard_index < shard_count, "shard_index must be below shard_count");
    let base = theorems.len() / shard_count;
    let extra = theorems.len() % shard_count;
    let start = shard_index * base + shard_index.min(extra);
    let len = base + usize::from(shard_index < extra);
    theorems[start..start + len].to_vec()
}

/// Round-robin endpoint for a prover.
pub fn assign_endpoint<T>(prover_index: usize, endpoints: &[T]) -> &T {
    &endpoints[prover_index % endpoints.len()]
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CampaignTheorem {
    pub id: String,
    pub goal: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignSettings {
    /// Passes per theorem (K).
    pub passes: usize,
    pub global_seed: u64,
    /// Skip a theorem's remaining passes once one proves it.
    pub stop_at_first_proof: bool,
}

impl Default for CampaignSettings {
    fn default() -> Self {
        CampaignSettings {
            passes: 1,
            global_seed: 0,
            stop_at_first_proof: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PassStatus {
    Proved,
    Unproved,
    /// Stopped by the search or theorem deadline.
    Timeout,
    /// A backend failed; not counted as a pass.
    InfraFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassRecord {
    pub pass: usize,
    pub seed: u64,
    pub status: PassStatus,
    pub generation_calls: usize,
    pub tactics_requested: usize,
    pub generation_timeouts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proof: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl PassRecord {
    pub fn counts(&self) -> bool {
        self.status != PassStatus::InfraFailed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremRecord {
    pub id: String,
    pub goal: String,
    pub proved: bool,
    /// Index among counted passes of the first proof.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solved_at: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proof: Option<Vec<String>>,
    /// Passes were cut short by the theorem deadline.
    #[serde(default)]
    pub deadline_exceeded: bool,
    pub passes: Vec<PassRecord>,
}

impl TheoremRecord {
    /// Outcomes of the counted passes, in order.
    pub fn counted_outcomes(&self) -> Vec<bool> {
        self.passes
            .iter()
            .filter(|p| p.counts())
            .map(|p| p.status == PassStatus::Proved)
            .collect()
    }
}

/// Budget spent by a campaign. Only counted passes enter `passes` and the
/// two totals; infrastructure-failed passes are tallied separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BudgetLedger {
    /// K: passes completed.
    pub passes: usize,
    /// W.
    pub width: usize,
    /// N.
    pub max_expansions: usize,
    pub generation_calls: usize,
    pub tactics_requested: usize,
    pub infra_failed_passes: usize,
    pub infra_generation_calls: usize,
    pub infra_tactics_requested: usize,
}

impl BudgetLedger {
    pub fn new(width: usize, max_expansions: usize) -> Self {
        BudgetLedger {
            width,
            max_expansions,
            ..Default::default()
        }
    }

    pub fn record(&mut self, pass: &PassRecord) {
        if pass.counts() {
            self.passes += 1;
            self.generation_calls += pass.generation_calls;
            self.tactics_requested += pass.tactics_requested;
        } else {
            self.infra_failed_passes += 1;
            self.infra_generation_calls += pass.generation_calls;
            self.infra_tactics_requested += pass.tactics_requested;
        }
    }

    /// K × W × N.
    pub fn tactic_budget(&self) -> usize {
        self.passes * self.width * self.max_expansions
    }

    pub fn within_ceiling(&self) -> bool {
        self.generation_calls <= self.passes * self.max_expansions
            && self.tactics_requested <= self.tactic_budget()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub settings: CampaignSettings,
    pub search: SearchConfig,
    pub shard_index: usize,
    pub shard_count: usize,
    pub theorems: Vec<TheoremRecord>,
    pub ledger: BudgetLedger,
}

impl CampaignReport {
    pub fn proved_ids(&self) -> Vec<&str> {
        self.theorems
            .iter()
            .filter(|t| t.proved)
            .map(|t| t.id.as_str())
            .collect()
    }

    pub fn solve_rate(&self) -> f64 {
        if self.theorems.is_empty() {
            return 0.0;
        }
        self.proved_ids().len() as f64 / self.theorems.len() as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Counts generation calls as they are issued, so a pass that aborts on a
/// backend failure still reports what it spent.
struct Metered<'a> {
    inner: &'a dyn Policy,
    calls: AtomicUsize,
    tactics: AtomicUsize,
}

impl Policy for Metered<'_> {
    fn generate(&self, state: &ProofState, params: &GenerateParams) -> Result<Vec<TacticCandidate>, PolicyError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.tactics.fetch_add(params.width, Ordering::Relaxed);
        self.inner.generate(state, params)
    }
}

fn run_pass(
    theorem: &CampaignTheorem,
    pass: usize,
    base: &SearchConfig,
    global_seed: u64,
    deadline: Option<Duration>,
    policy: &dyn Policy,
    env: &dyn Environment,
) -> PassRecord {
    let seed = pass_seed(&theorem.id, pass, global_seed);
    let mut config = base.with_seed(seed);
    config.deadline = match (config.deadline, deadline) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let metered = Metered {
        inner: policy,
        calls: AtomicUsize::new(0),
        tactics: AtomicUsize::new(0),
    };
    let result = env
        .init(&theorem.goal)
        .map_err(SearchError::from)
        .and_then(|root| run_search(&root, &metered, env, &config));
    let mut record = PassRecord {
        pass,
        seed,
        status: PassStatus::Unproved,
        generation_calls: metered.calls.into_inner(),
        tactics_requested: metered.tactics.into_inner(),
        generation_timeouts: 0,
        proof: None,
        error: None,
    };
    match result {
        Ok(r) => {
            record.generation_timeouts = r.generation_timeouts;
            record.status = match r.outcome {
                SearchOutcome::Proved(path) => {
                    record.proof = Some(path.tactics().into_iter().map(str::to_string).collect());
                    PassStatus::Proved
                }
                SearchOutcome::Exhausted => PassStatus::Unproved,
                SearchOutcome::Timeout => PassStatus::Timeout,
            };
        }
        Err(SearchError::Config(m)) => panic!("search config validated up front: {m}"),
        Err(e) => {
            warn!(theorem = %theorem.id, pass, error = %e, "pass failed on infrastructure");
            record.status = PassStatus::InfraFailed;
            record.error = Some(e.to_string());
        }
    }
    record
}

struct Progress {
    started: Option<Instant>,
    passes: Vec<PassRecord>,
    deadline_exceeded: bool,
}

/// Runs up to `settings.passes` seeded searches for every theorem of the
/// configured shard on `pool.num_provers` workers.
///
/// Pass `p` of theorem `t` searches with seed `pass_seed(t, p, global_seed)`.
/// Backend failures mark a pass `InfraFailed`; it still uses up its pass index
/// so an unreachable endpoint cannot loop forever.
pub fn run_campaign(
    theorems: &[CampaignTheorem],
    pool: &PoolConfig,
    search: &SearchConfig,
    settings: &CampaignSettings,
    backends: &dyn BackendFactory,
) -> Result<CampaignReport, OrchestratorError> {
    pool.validate()?;
    let search = SearchConfig {
        tactic_timeout: pool.per_tactic_timeout,
        generate_timeout: pool.per_generate_timeout,
        ..search.clone()
    };
    search
        .validate()
        .map_err(|e| OrchestratorError::Config(e.to_string()))?;
    let theorems = shard_theorems(theorems, pool.shard_index, pool.shard_count);

    let workers = pool.num_provers.min(theorems.len()).max(1);
    let mut slots = Vec::with_capacity(workers);
    for w in 0..workers {
        let endpoint = assign_endpoint(w, &pool.policy_endpoints);
        let policy = backends
            .policy(endpoint)
            .map_err(|e| OrchestratorError::Backend(format!("{endpoint}: {e}")))?;
        let env = backends.environment().map_err(OrchestratorError::Backend)?;
        slots.push((policy, env));
    }

    let mut progress: Vec<Progress> = theorems
        .iter()
        .map(|_| Progress {
            started: None,
            passes: Vec::new(),
            deadline_exceeded: false,
        })
        .collect();

    if settings.passes > 0 && !theorems.is_empty() {
        let (task_tx, task_rx) = unbounded::<(usize, usize, Option<Duration>)>();
        let (done_tx, done_rx) = unbounded::<(usize, PassRecord)>();
        let theorems_ref = &theorems;
        let search_ref = &search;
        thread::scope(|s| {
            for (w, (policy, env)) in slots.iter().enumerate() {
                let task_rx = task_rx.clone();
                let done_tx = done_tx.clone();
                s.spawn(move || {
                    for (t, pass, deadline) in task_rx {
                        debug!(worker = w, theorem = %theorems_ref[t].id, pass, "pass start");
                        let record = run_pass(
                            &theorems_ref[t],
                            pass,
                            search_ref,
                            settings.global_seed,
                            deadline,
                            policy.as_ref(),
                            env.as_ref(),
                        );
                        if done_tx.send((t, record)).is_err() {
                            break;
                        }
                    }
                });
            }
            drop(done_tx);

            let now = Instant::now();
            for (t, p) in progress.iter_mut().enumerate() {
                p.started = Some(now);
                task_tx
                    .send((t, 0, pool.per_theorem_deadline))
                    .expect("workers alive");
            }
            let mut outstanding = theorems.len();
            while outstanding > 0 {
                let (t, record) = done_rx.recv().expect("a worker reports every task");
                let proved = record.status == PassStatus::Proved;
                let next = record.pass + 1;
                let p = &mut progress[t];
                p.passes.push(record);
                let remaining = pool
                    .per_theorem_deadline
                    .map(|d| d.saturating_sub(p.started.expect("started").elapsed()));
                if (proved && settings.stop_at_first_proof) || next >= settings.passes {
                    outstanding -= 1;
                } else if remaining.is_some_and(|r| r.is_zero()) {
                    p.deadline_exceeded = true;
                    outstanding -= 1;
                } else {
                    task_tx.send((t, next, remaining)).expect("workers alive");
                }
            }
            drop(task_tx);
        });
    }

    let mut ledger = BudgetLedger::new(search.width, search.max_expansions);
    let records: Vec<TheoremRecord> = theorems
        .iter()
        .zip(progress)
        .map(|(th, p)| {
            for pass in &p.passes {
                ledger.record(pass);
            }
            let first = p
                .passes
                .iter()
                .filter(|r| r.counts())
                .position(|r| r.status == PassStatus::Proved);
            let proof = p
                .passes
                .iter()
                .find(|r| r.status == PassStatus::Proved)
                .and_then(|r| r.proof.clone());
            TheoremRecord {
                id: th.id.clone(),
                goal: th.goal.clone(),
                proved: first.is_some(),
                solved_at: first,
                proof,
                deadline_exceeded: p.deadline_exceeded,
                passes: p.passes,
            }
        })
        .collect();
    assert!(ledger.within_ceiling(), "budget ceiling exceeded: {ledger:?}");
    info!(
        theorems = records.len(),
        proved = records.iter().filter(|r| r.proved).count(),
        calls = ledger.generation_calls,
        "campaign done"
    );
    Ok(CampaignReport {
        settings: *settings,
        search,
        shard_index: pool.shard_index,
        shard_count: pool.shard_count,
        theorems: records,
        ledger,
    })
}

/// Backends handed out as-is: one shared policy per endpoint name and one
/// shared environment. Suited to in-process policies and environments.
pub struct SharedBackends {
    pub policies: Vec<(String, Arc<dyn Policy>)>,
    pub environment: Arc<dyn Environment>,
}

impl SharedBackends {
    pub fn single(policy: Arc<dyn Policy>, environment: Arc<dyn Environment>) -> Self {
        SharedBackends {
            policies: vec![("uniform".into(), policy)],
            environment,
        }
    }
}

impl BackendFactory for SharedBackends {
    fn policy(&self, endpoint: &str) -> Result<Arc<dyn Policy>, String> {
        self.policies
            .iter()
            .find(|(name, _)| name == endpoint)
            .map(|(_, p)| p.clone())
            .ok_or_else(|| format!("no policy registered for `{endpoint}`"))
    }

    fn environment(&self) -> Result<Arc<dyn Environment>, String> {
        Ok(self.environment.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::peano::vocabulary;
    use crate::environment::PeanoEnvironment;
    use crate::policy::TabularPolicy;
    use proptest::prelude::*;

    fn theorems(goals: &[&str]) -> Vec<CampaignTheorem> {
        goals
            .iter()
            .enumerate()
            .map(|(i, g)| CampaignTheorem {
                id: format!("t{i}"),
                goal: g.to_string(),
            })
            .collect()
    }

    fn uniform_backends() -> SharedBackends {
        SharedBackends::single(
            Arc::new(TabularPolicy::uniform(&vocabulary()).unwrap()),
            Arc::new(PeanoEnvironment),
        )
    }

    fn sampling(width: usize, n: usize) -> SearchConfig {
        SearchConfig {
            width,
            max_expansions: n,
            decoding: crate::policy::Decoding::Sample {
                temperature: 1.0,
                top_p: 1.0,
                seed: 0,
            },
            ..SearchConfig::default()
        }
    }

    #[test]
    fn ten_into_three_shards() {
        let v: Vec<u32> = (0..10).collect();
        let sizes: Vec<_> = (0..3).map(|i| shard_theorems(&v, i, 3).len()).collect();
        assert_eq!(sizes, [4, 3, 3]);
        assert_eq!(shard_theorems(&v, 0, 1), v);
    }

    #[test]
    fn round_robin_endpoints() {
        let eps: Vec<usize> = (0..8).collect();
        assert_eq!(*assign_endpoint(9, &eps), 1);
        assert_eq!(*assign_endpoint(3, &[0]), 0);
        let mut hits = [0; 8];
        (0..16).for_each(|i| hits[*assign_endpoint(i, &eps)] += 1);
        assert_eq!(hits, [2; 8]);
    }

    #[test]
    fn pool_validation() {
        let bad = PoolConfig {
            shard_index: 2,
            shard_count: 2,
            ..PoolConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(PoolConfig {
            policy_endpoints: vec![],
            ..PoolConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn early_stop_skips_later_passes() {
        let ths = theorems(&["Z = Z"]);
        let r = run_campaign(
            &ths,
            &PoolConfig::default(),
            &sampling(5, 10),
            &CampaignSettings {
                passes: 4,
                ..CampaignSettings::default()
            },
            &uniform_backends(),
        )
        .unwrap();
        assert_eq!(r.theorems[0].passes.len(), 1);
        assert_eq!(r.theorems[0].solved_at, Some(0));
        assert_eq!(r.ledger.passes, 1);
    }

    #[test]
    fn unprovable_goal_uses_every_pass() {
        let ths = theorems(&["Z = S(Z)"]);
        let r = run_campaign(
            &ths,
            &PoolConfig::default(),
            &sampling(2, 3),
            &CampaignSettings {
                passes: 3,
                ..CampaignSettings::default()
            },
            &uniform_backends(),
        )
        .unwrap();
        let seeds: Vec<_> = r.theorems[0].passes.iter().map(|p| p.seed).collect();
        assert_eq!(seeds, (0..3).map(|p| pass_seed("t0", p, 0)).collect::<Vec<_>>());
        assert!(!r.theorems[0].proved);
        assert_eq!(r.ledger.passes, 3);
        assert!(r.ledger.within_ceiling());
    }

    #[test]
    fn worker_count_does_not_change_the_report() {
        let ths = theorems(&[
            "add(S(Z),S(Z)) = S(S(Z))",
            "add(Z,S(Z)) = S(Z)",
            "Z = S(Z)",
            "add(add(Z,Z),S(Z)) = S(Z)",
        ]);
        let run = |n| {
            run_campaign(
                &ths,
                &PoolConfig {
                    num_provers: n,
                    ..PoolConfig::default()
                },
                &sampling(2, 20),
                &CampaignSettings {
                    passes: 4,
                    global_seed: 9,
                    stop_at_first_proof: true,
                },
                &uniform_backends(),
            )
            .unwrap()
        };
        assert_eq!(run(1).to_json(), run(4).to_json());
    }

    #[test]
    fn unknown_endpoint_is_a_setup_error() {
        let pool = PoolConfig {
            policy_endpoints: vec!["nowhere".into()],
            ..PoolConfig::default()
        };
        let err = run_campaign(
            &theorems(&["Z = Z"]),
            &pool,
            &SearchConfig::default(),
            &CampaignSettings::default(),
            &uniform_backends(),
        )
        .unwrap_err();
        assert!(matches!(err, OrchestratorError::Backend(_)));
    }

    proptest! {
        #[test]
        fn shards_partition_the_input(n in 0usize..200, count in 1usize..17) {
            let v: Vec<usize> = (0..n).collect();
            let shards: Vec<Vec<usize>> = (0..count).map(|i| shard_theorems(&v, i, count)).collect();
            let joined: Vec<usize> = shards.iter().flatten().copied().collect();
            prop_assert_eq!(joined, v);
            let max = shards.iter().map(Vec::len).max().unwrap();
            let min = shards.iter().map(Vec::len).min().unwrap();
            prop_assert!(max - min <= 1);
        }
    }
}
