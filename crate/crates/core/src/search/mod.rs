//! Length-normalized best-first search over proof states.
//!
//! The goal is expanded first, unconditionally. After that the open node with
//! the highest `cum_logprob / depth^alpha` is expanded next (ties go to the
//! earlier insertion). Each expansion asks the policy for `width` tactics and
//! applies each distinct one, producing an open, proved or error child. The
//! search ends at the first proof, when the frontier runs dry, when
//! `max_expansions` policy calls have been made, or at the wall-clock deadline.

mod export;
mod frontier;
mod node;

use std::collections::HashSet;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use tracing::debug;

use crate::environment::{messages, EnvOutcome, Environment};
use crate::error::{PolicyError, SearchError};
use crate::hashing::expansion_seed;
use crate::policy::{Decoding, GenerateParams, Policy};

pub use export::{ExportedNode, ExportedTree};
pub use frontier::Frontier;
pub use node::{
    score, NodeId, NodeStatus, ProofPath, ProofState, ProofStep, SearchNode, SearchTree, StateId,
    TacticCandidate,
};

pub(crate) mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }

    pub mod option {
        use std::time::Duration;

        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(d: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
            match d {
                Some(d) => s.serialize_some(&(d.as_millis() as u64)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
            Option::<u64>::deserialize(d).map(|v| v.map(Duration::from_millis))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Length-normalization exponent in `[0, 1]`.
    pub alpha: f64,
    /// Tactics requested per expansion (W).
    pub width: usize,
    /// Policy calls allowed per search (N).
    pub max_expansions: usize,
    pub decoding: Decoding,
    #[serde(with = "millis", rename = "tactic_timeout_ms")]
    pub tactic_timeout: Duration,
    #[serde(with = "millis", rename = "generate_timeout_ms")]
    pub generate_timeout: Duration,
    pub max_queue_size: usize,
    /// Wall-clock budget for the whole search.
    #[serde(
        with = "millis::option",
        rename = "deadline_ms",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub deadline: Option<Duration>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            alpha: 0.0,
            width: 2,
            max_expansions: 600,
            decoding: Decoding::Beam,
            tactic_timeout: Duration::from_secs(10),
            generate_timeout: Duration::from_secs(30),
            max_queue_size: 1 << 20,
            deadline: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(SearchError::Config(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if self.width == 0 {
            return Err(SearchError::Config("width must be positive".into()));
        }
        if self.max_expansions == 0 {
            return Err(SearchError::Config("max_expansions must be positive".into()));
        }
        if self.max_queue_size == 0 {
            return Err(SearchError::Config("max_queue_size must be positive".into()));
        }
        self.decoding.validate().map_err(SearchError::Config)
    }

    /// The same configuration sampling with a different seed (no-op for beam).
    pub fn with_seed(&self, seed: u64) -> Self {
        SearchConfig {
            decoding: self.decoding.with_seed(seed),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SearchOutcome {
    Proved(ProofPath),
    Exhausted,
    Timeout,
}

impl SearchOutcome {
    pub fn is_proved(&self) -> bool {
        matches!(self, SearchOutcome::Proved(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Proved,
    FrontierEmpty,
    BudgetSpent,
    Deadline,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub outcome: SearchOutcome,
    pub stop_reason: StopReason,
    pub expansions_used: usize,
    /// One per expansion, including ones whose generation failed.
    pub generation_calls: usize,
    /// `width` per generation call.
    pub tactics_requested: usize,
    /// Expansions whose generation timed out or returned nothing.
    pub dead_end_expansions: usize,
    /// Of those, the ones that hit the generation timeout.
    pub generation_timeouts: usize,
    /// Open nodes evicted by the queue bound.
    pub dropped_nodes: usize,
    pub tree: SearchTree,
    /// The proved leaf, when there is one.
    pub proved_node: Option<NodeId>,
}

struct Run {
    tree: SearchTree,
    frontier: Frontier,
    expansions: usize,
    tactics_requested: usize,
    dead_ends: usize,
    generation_timeouts: usize,
}

impl Run {
    fn finish(self, outcome: SearchOutcome, stop_reason: StopReason, proved_node: Option<NodeId>) -> SearchResult {
        SearchResult {
            outcome,
            stop_reason,
            expansions_used: self.expansions,
            generation_calls: self.expansions,
            tactics_requested: self.tactics_requested,
            dead_end_expansions: self.dead_ends,
            generation_timeouts: self.generation_timeouts,
            dropped_nodes: self.frontier.dropped(),
            tree: self.tree,
            proved_node,
        }
    }
}

/// Runs one best-first search from `goal`.
///
/// Tactic errors and generation timeouts are part of normal search; only
/// transport or protocol failures of a backend abort with an error.
pub fn run_search(
    goal: &ProofState,
    policy: &dyn Policy,
    env: &dyn Environment,
    config: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    config.validate()?;
    let started = Instant::now();
    let mut run = Run {
        tree: SearchTree::new(goal.clone()),
        frontier: Frontier::new(config.max_queue_size),
        expansions: 0,
        tactics_requested: 0,
        dead_ends: 0,
        generation_timeouts: 0,
    };
    let mut seen: HashSet<StateId> = HashSet::from([goal.id()]);

    let mut next = Some(run.tree.root());
    loop {
        let Some(current) = next.take().or_else(|| run.frontier.pop()) else {
            return Ok(run.finish(SearchOutcome::Exhausted, StopReason::FrontierEmpty, None));
        };
        if run.expansions >= config.max_expansions {
            return Ok(run.finish(SearchOutcome::Exhausted, StopReason::BudgetSpent, None));
        }
        if deadline_passed(started, config.deadline) {
            return Ok(run.finish(SearchOutcome::Timeout, StopReason::Deadline, None));
        }

        let state = run.tree.node(current).state.clone();
        debug_assert_eq!(run.tree.node(current).status, NodeStatus::Open);
        let params = GenerateParams {
            width: config.width,
            decoding: match config.decoding {
                Decoding::Beam => Decoding::Beam,
                Decoding::Sample { seed, .. } => {
                    config.decoding.with_seed(expansion_seed(seed, run.expansions))
                }
            },
            timeout: config.generate_timeout,
        };
        run.expansions += 1;
        run.tactics_requested += config.width;
        run.tree.node_mut(current).expanded = true;

        let generated = match policy.generate(&state, &params) {
            Ok(t) => t,
            Err(e) if e.is_infrastructure() => return Err(SearchError::Policy(e)),
            Err(e) => {
                if matches!(e, PolicyError::Timeout) {
                    run.generation_timeouts += 1;
                }
                debug!(state = %state, error = %e, "generation failed; dead end");
                Vec::new()
            }
        };
        let tactics = dedup_tactics(generated, config.width);
        if tactics.is_empty() {
            run.dead_ends += 1;
            continue;
        }

        let mut proved = None;
        for tactic in tactics {
            if deadline_passed(started, config.deadline) {
                return Ok(run.finish(SearchOutcome::Timeout, StopReason::Deadline, None));
            }
            let (child, status) = match env.apply(&state, &tactic.tactic, config.tactic_timeout)? {
                EnvOutcome::NewState(child) if seen.insert(child.id()) => (child, NodeStatus::Open),
                EnvOutcome::NewState(child) => {
                    (child, NodeStatus::Error(messages::DUPLICATE.to_string()))
                }
                EnvOutcome::ProofFinished => (ProofState::no_goals(), NodeStatus::Proved),
                EnvOutcome::TacticError(msg) => (state.clone(), NodeStatus::Error(msg)),
            };
            let is_open = status == NodeStatus::Open;
            let is_proved = status == NodeStatus::Proved;
            let id = run.tree.push_child(current, tactic, child, status, config.alpha);
            if is_open {
                let s = run.tree.node(id).score.expect("children are scored");
                run.frontier.push(id, s);
            } else if is_proved {
                proved.get_or_insert(id);
            }
        }

        if let Some(id) = proved {
            let path = run.tree.reconstruct_path(id);
            return Ok(run.finish(SearchOutcome::Proved(path), StopReason::Proved, Some(id)));
        }
    }
}

fn deadline_passed(started: Instant, deadline: Option<Duration>) -> bool {
    deadline.is_some_and(|d| started.elapsed() >= d)
}

/// Drops repeated tactic strings, keeping the highest-logprob copy in the
/// position of its first occurrence, and caps the list at `width`.
fn dedup_tactics(mut tactics: Vec<TacticCandidate>, width: usize) -> Vec<TacticCandidate> {
    let mut out: Vec<TacticCandidate> = Vec::with_capacity(tactics.len().min(width));
    for t in tactics.drain(..) {
        match out.iter_mut().find(|o| o.tactic == t.tactic) {
            Some(existing) => {
                if t.logprob > existing.logprob {
                    existing.logprob = t.logprob;
                }
            }
            None => out.push(t),
        }
    }
    out.truncate(width);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayError {
    /// A step's recorded state differs from the state the environment produced.
    StateMismatch { step: usize },
    /// The environment finished or failed before the last step.
    Premature { step: usize, outcome: String },
    /// The last step did not finish the proof.
    NotFinished,
    Environment(String),
}

/// Replays `path` from `goal`, checking every intermediate state and that the
/// last tactic finishes the proof.
pub fn replay(goal: &ProofState, path: &ProofPath, env: &dyn Environment) -> Result<(), ReplayError> {
    if path.is_empty() {
        return Err(ReplayError::NotFinished);
    }
    let mut state = goal.clone();
    let last = path.len() - 1;
    for (i, step) in path.steps.iter().enumerate() {
        if step.state != state {
            return Err(ReplayError::StateMismatch { step: i });
        }
        let outcome = env
            .apply(&state, &step.tactic.tactic, Duration::from_secs(60))
            .map_err(|e| ReplayError::Environment(e.to_string()))?;
        match (outcome, i == last) {
            (EnvOutcome::ProofFinished, true) => return Ok(()),
            (EnvOutcome::NewState(s), false) => state = s,
            (EnvOutcome::NewState(_), true) => return Err(ReplayError::NotFinished),
            (other, _) => {
                return Err(ReplayError::Premature {
                    step: i,
                    outcome: format!("{other:?}"),
                })
            }
        }
    }
    Err(ReplayError::NotFinished)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::peano::vocabulary;
    use crate::environment::PeanoEnvironment;
    use crate::policy::TabularPolicy;

    fn beam_config(width: usize, n: usize) -> SearchConfig {
        SearchConfig {
            width,
            max_expansions: n,
            ..SearchConfig::default()
        }
    }

    fn goal(s: &str) -> ProofState {
        PeanoEnvironment.init(s).unwrap()
    }

    #[test]
    fn succ_goal_found_with_three_steps() {
        let policy = TabularPolicy::uniform(&vocabulary()).unwrap();
        let g = goal("add(S(Z),Z) = S(Z)");
        let r = run_search(&g, &policy, &PeanoEnvironment, &beam_config(4, 100)).unwrap();
        let SearchOutcome::Proved(path) = &r.outcome else {
            panic!("expected a proof, got {:?}", r.outcome)
        };
        assert_eq!(path.tactics().collect::<Vec<_>>(), ["rw_l add_succ", "rw_l add_zero", "refl"]);
        assert_eq!(replay(&g, path, &PeanoEnvironment), Ok(()));
        assert_eq!(r.generation_calls, r.expansions_used);
    }

    #[test]
    fn unprovable_goal_exhausts() {
        let policy = TabularPolicy::uniform(&vocabulary()).unwrap();
        let r = run_search(&goal("Z = S(Z)"), &policy, &PeanoEnvironment, &beam_config(5, 50)).unwrap();
        assert_eq!(r.outcome, SearchOutcome::Exhausted);
        assert!(r.expansions_used <= 50);
    }

    #[test]
    fn reflexive_goal_takes_one_expansion() {
        let mut policy = TabularPolicy::new();
        policy.insert("Z = Z", [("refl", 0.9), ("rw_l add_zero", 0.1)]).unwrap();
        let r = run_search(&goal("Z = Z"), &policy, &PeanoEnvironment, &beam_config(1, 10)).unwrap();
        assert!(r.outcome.is_proved());
        assert_eq!((r.expansions_used, r.generation_calls), (1, 1));
    }

    #[test]
    fn alpha_out_of_range_is_rejected() {
        let policy = TabularPolicy::new();
        let cfg = SearchConfig {
            alpha: 1.5,
            ..SearchConfig::default()
        };
        assert!(matches!(
            run_search(&goal("Z = Z"), &policy, &PeanoEnvironment, &cfg),
            Err(SearchError::Config(_))
        ));
    }

    #[test]
    fn duplicate_tactics_keep_best_logprob() {
        let out = dedup_tactics(
            vec![
                TacticCandidate::new("a", -2.0),
                TacticCandidate::new("b", -1.0),
                TacticCandidate::new("a", -0.5),
            ],
            5,
        );
        assert_eq!(out, vec![TacticCandidate::new("a", -0.5), TacticCandidate::new("b", -1.0)]);
    }

    #[test]
    fn transpositions_become_duplicate_errors() {
        // Both sides rewrite to the same goal in either order.
        let policy = TabularPolicy::uniform(&vocabulary()).unwrap();
        let g = goal("add(Z,Z) = add(Z,Z)");
        let cfg = SearchConfig {
            max_expansions: 3,
            width: 5,
            ..SearchConfig::default()
        };
        let r = run_search(&g, &policy, &PeanoEnvironment, &cfg).unwrap();
        // the root closes with refl immediately
        assert!(r.outcome.is_proved());
        let g = goal("add(Z,Z) = add(Z,S(Z))");
        let r = run_search(&g, &policy, &PeanoEnvironment, &beam_config(5, 20)).unwrap();
        let dups = r
            .tree
            .nodes()
            .filter(|(_, n)| n.status == NodeStatus::Error("duplicate".into()))
            .count();
        assert!(dups >= 1);
        let mut ids = HashSet::new();
        for (_, n) in r.tree.nodes() {
            if n.status == NodeStatus::Open {
                assert!(ids.insert(n.state.id()), "open states are unique");
            }
        }
    }

    #[test]
    fn zero_deadline_times_out() {
        let policy = TabularPolicy::uniform(&vocabulary()).unwrap();
        let cfg = SearchConfig {
            deadline: Some(Duration::ZERO),
            ..beam_config(2, 10)
        };
        let r = run_search(&goal("Z = Z"), &policy, &PeanoEnvironment, &cfg).unwrap();
        assert_eq!(r.outcome, SearchOutcome::Timeout);
        assert_eq!(r.tree.len(), 1);
    }

    #[test]
    fn config_serializes_durations_as_millis() {
        let cfg = SearchConfig::default();
        let v = serde_json::to_value(&cfg).unwrap();
        assert_eq!(v["tactic_timeout_ms"], 10_000);
        let back: SearchConfig = serde_json::from_value(v).unwrap();
        assert_eq!(back, cfg);
    }
}
