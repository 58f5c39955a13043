//! Seeded synthetic goal corpora with oracle annotations.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::environment::oracle::brute_force_solve;
use crate::environment::peano::{Goal, Term};
use crate::error::IoError;

/// Depth handed to the oracle when labelling. Generous enough that every
/// provable goal of nesting ≤ 8 receives its exact minimal length.
pub const LABEL_DEPTH: usize = 256;

/// Draw attempts for a right-hand side with the same value as the left.
const MATCH_ATTEMPTS: usize = 64;

/// One corpus line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusGoal {
    pub id: String,
    pub goal: String,
    pub provable: bool,
    /// Oracle minimal proof length; `None` when unprovable.
    pub min_length: Option<usize>,
}

impl CorpusGoal {
    pub fn labelled(id: String, goal: &Goal) -> Self {
        let proof = brute_force_solve(goal, LABEL_DEPTH);
        CorpusGoal {
            id,
            goal: goal.to_string(),
            provable: proof.is_some(),
            min_length: proof.map(|p| p.length),
        }
    }
}

fn random_term(rng: &mut ChaCha8Rng, budget: usize) -> Term {
    // weights: Z 1, S 2, add 2 (add consumes two levels)
    let total = match budget {
        0 => return Term::Z,
        1 => 3,
        _ => 5,
    };
    match rng.gen_range(0..total) {
        0 => Term::Z,
        1 | 2 => Term::succ(random_term(rng, budget - 1)),
        _ => {
            let a = random_term(rng, budget - 2);
            let b = random_term(rng, budget - 2);
            Term::add(a, b)
        }
    }
}

fn random_goal(rng: &mut ChaCha8Rng, max_nesting: usize) -> Goal {
    let lhs = random_term(rng, max_nesting);
    let want_provable = rng.gen_bool(0.5);
    let mut rhs = random_term(rng, max_nesting);
    if want_provable {
        let target = lhs.value();
        for _ in 0..MATCH_ATTEMPTS {
            if rhs.value() == target {
                break;
            }
            rhs = random_term(rng, max_nesting);
        }
    }
    Goal::new(lhs, rhs)
}

/// `count` seeded goals with terms of nesting at most `max_nesting`
/// (`Z` = 0, `S` +1, `add` +2), each labelled by the exhaustive oracle.
/// Identical for identical arguments.
pub fn generate_goal_corpus(count: usize, max_nesting: usize, seed: u64) -> Vec<CorpusGoal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let goal = random_goal(&mut rng, max_nesting);
            CorpusGoal::labelled(format!("g{i:04}"), &goal)
        })
        .collect()
}

pub fn write_corpus(path: &Path, goals: &[CorpusGoal]) -> Result<(), IoError> {
    let mut out = Vec::new();
    for g in goals {
        serde_json::to_writer(&mut out, g).expect("corpus lines serialize");
        out.push(b'\n');
    }
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|e| IoError::io(path, e))
}

/// Reads a corpus. Lines may also be bare `{"id", "goal"}` objects, in which
/// case oracle labels are computed on load.
pub fn read_corpus(path: &Path) -> Result<Vec<CorpusGoal>, IoError> {
    #[derive(Deserialize)]
    struct Line {
        id: String,
        goal: String,
        provable: Option<bool>,
        min_length: Option<usize>,
    }
    let file = fs::File::open(path).map_err(|e| IoError::io(path, e))?;
    let mut goals = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| IoError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(&line).map_err(|source| IoError::Json {
            path: path.to_path_buf(),
            line: n + 1,
            source,
        })?;
        let entry = match parsed.provable {
            Some(provable) => CorpusGoal {
                id: parsed.id,
                goal: parsed.goal,
                provable,
                min_length: parsed.min_length,
            },
            None => match parsed.goal.parse::<Goal>() {
                Ok(g) => CorpusGoal::labelled(parsed.id, &g),
                // Not a Peano goal: keep it unlabelled for remote environments.
                Err(_) => CorpusGoal {
                    id: parsed.id,
                    goal: parsed.goal,
                    provable: false,
                    min_length: None,
                },
            },
        };
        goals.push(entry);
    }
    Ok(goals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn same_seed_same_corpus() {
        assert_eq!(generate_goal_corpus(50, 6, 11), generate_goal_corpus(50, 6, 11));
        assert_ne!(generate_goal_corpus(50, 6, 11), generate_goal_corpus(50, 6, 12));
    }

    #[test]
    fn nesting_one_stays_in_the_four_base_goals() {
        let allowed: BTreeSet<&str> = ["Z = Z", "Z = S(Z)", "S(Z) = Z", "S(Z) = S(Z)"].into();
        for g in generate_goal_corpus(100, 1, 3) {
            assert!(allowed.contains(g.goal.as_str()), "{}", g.goal);
        }
    }

    #[test]
    fn labels_match_value_semantics() {
        let corpus = generate_goal_corpus(200, 6, 2024);
        assert_eq!(corpus.len(), 200);
        for c in &corpus {
            let g: Goal = c.goal.parse().unwrap();
            assert!(g.nesting() <= 6);
            assert_eq!(c.provable, g.is_provable(), "{}", c.goal);
            assert_eq!(c.provable, c.min_length.is_some());
        }
        assert!(corpus.iter().any(|c| c.provable));
        assert!(corpus.iter().any(|c| !c.provable));
    }

    #[test]
    fn corpus_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let corpus = generate_goal_corpus(20, 4, 5);
        write_corpus(&path, &corpus).unwrap();
        assert_eq!(read_corpus(&path).unwrap(), corpus);
    }
}
