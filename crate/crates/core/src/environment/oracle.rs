//! Exhaustive breadth-first prover for the Peano system.
//!
//! Used to label corpora and as the reference the search is checked against.
//! It shares nothing with the best-first search beyond the rewrite semantics.

use std::collections::{HashSet, VecDeque};

use crate::environment::peano::{Goal, Tactic};
use crate::environment::EnvOutcome;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleProof {
    /// Minimal number of tactics.
    pub length: usize,
    pub witness: Vec<Tactic>,
}

/// Minimal proof of `goal` using at most `max_depth` tactics, if one exists.
///
/// The rewrite system is terminating, so the reachable state set is finite
/// and a large `max_depth` still terminates.
pub fn brute_force_solve(goal: &Goal, max_depth: usize) -> Option<OracleProof> {
    brute_force_solve_with(goal, max_depth, &Tactic::ALL)
}

/// As [`brute_force_solve`], restricted to a tactic subset.
pub fn brute_force_solve_with(
    goal: &Goal,
    max_depth: usize,
    tactics: &[Tactic],
) -> Option<OracleProof> {
    if max_depth == 0 {
        return None;
    }
    let mut seen: HashSet<Goal> = HashSet::new();
    seen.insert(goal.clone());
    let mut queue: VecDeque<(Goal, Vec<Tactic>)> = VecDeque::new();
    queue.push_back((goal.clone(), Vec::new()));
    while let Some((g, path)) = queue.pop_front() {
        if path.len() >= max_depth {
            continue;
        }
        for &t in tactics {
            match g.apply(t) {
                EnvOutcome::ProofFinished => {
                    let mut witness = path.clone();
                    witness.push(t);
                    return Some(OracleProof {
                        length: witness.len(),
                        witness,
                    });
                }
                EnvOutcome::NewState(s) => {
                    let next: Goal = s.text().parse().expect("environment emits canonical goals");
                    if seen.insert(next.clone()) {
                        let mut p = path.clone();
                        p.push(t);
                        queue.push_back((next, p));
                    }
                }
                EnvOutcome::TacticError(_) => {}
            }
        }
    }
    None
}

/// Number of distinct goals reachable from `goal` (including itself).
pub fn reachable_states(goal: &Goal) -> usize {
    let mut seen: HashSet<Goal> = HashSet::new();
    let mut stack = vec![goal.clone()];
    seen.insert(goal.clone());
    while let Some(g) = stack.pop() {
        for t in Tactic::ALL {
            if let EnvOutcome::NewState(s) = g.apply(t) {
                let next: Goal = s.text().parse().expect("canonical goal");
                if seen.insert(next.clone()) {
                    stack.push(next);
                }
            }
        }
    }
    seen.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(s: &str, depth: usize) -> Option<OracleProof> {
        brute_force_solve(&s.parse().unwrap(), depth)
    }

    #[test]
    fn reflexive_goal_needs_one_step() {
        let p = solve("Z = Z", 1).unwrap();
        assert_eq!(p.length, 1);
        assert_eq!(p.witness, vec![Tactic::Refl]);
    }

    #[test]
    fn succ_goal_needs_three_steps() {
        let p = solve("add(S(Z), Z) = S(Z)", 5).unwrap();
        assert_eq!(p.length, 3);
        let names: Vec<String> = p.witness.iter().map(|t| t.to_string()).collect();
        assert_eq!(names, ["rw_l add_succ", "rw_l add_zero", "refl"]);
        assert!(solve("add(S(Z), Z) = S(Z)", 2).is_none());
    }

    #[test]
    fn zero_is_not_succ_zero() {
        for depth in [1, 5, 50] {
            assert!(solve("Z = S(Z)", depth).is_none());
        }
        assert_eq!(reachable_states(&"Z = S(Z)".parse().unwrap()), 1);
    }

    #[test]
    fn oracle_agrees_with_value_semantics() {
        for s in ["add(Z,Z) = Z", "add(S(S(Z)),S(Z)) = add(S(Z),S(S(Z)))", "add(Z,S(Z)) = Z"] {
            let g: Goal = s.parse().unwrap();
            assert_eq!(brute_force_solve(&g, 64).is_some(), g.is_provable(), "{s}");
        }
    }
}
