//! SFT and DPO datasets and their JSONL files.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::IoError;
use crate::hashing::sha256_hex;

/// A (state, tactic) pair from a verified proof path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SftExample {
    pub state: String,
    pub tactic: String,
    pub statement_id: String,
    pub round: usize,
    /// Position of the step on its proof path, from 0.
    pub pos: usize,
}

/// `(state, chosen, rejected)` where `chosen` lies on the proof path and
/// `rejected` was expanded from the same state and failed with `error`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PreferenceTuple {
    pub state: String,
    pub chosen: String,
    pub rejected: String,
    pub error: String,
    pub round: usize,
}

/// Cumulative SFT data. Exact `(state, tactic)` repeats are stored once; the
/// first occurrence keeps its provenance and later ones bump a count.
#[derive(Debug, Clone, Default)]
pub struct SftDataset {
    examples: Vec<SftExample>,
    multiplicity: Vec<usize>,
    index: HashMap<(String, String), usize>,
}

impl SftDataset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an example; returns `true` when the pair was new.
    pub fn push(&mut self, example: SftExample) -> bool {
        let key = (example.state.clone(), example.tactic.clone());
        match self.index.get(&key) {
            Some(&i) => {
                self.multiplicity[i] += 1;
                false
            }
            None => {
                self.index.insert(key, self.examples.len());
                self.examples.push(example);
                self.multiplicity.push(1);
                true
            }
        }
    }

    pub fn examples(&self) -> &[SftExample] {
        &self.examples
    }

    pub fn multiplicity(&self, state: &str, tactic: &str) -> usize {
        self.index
            .get(&(state.to_string(), tactic.to_string()))
            .map_or(0, |&i| self.multiplicity[i])
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Total examples including repeats.
    pub fn total_with_repeats(&self) -> usize {
        self.multiplicity.iter().sum()
    }

    pub fn to_jsonl(&self) -> Vec<u8> {
        to_jsonl(&self.examples)
    }

    /// SHA-256 of the JSONL serialization.
    pub fn fingerprint(&self) -> String {
        sha256_hex(&self.to_jsonl())
    }
}

pub fn to_jsonl<T: Serialize>(rows: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut out, r).expect("row serializes");
        out.push(b'\n');
    }
    out
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), IoError> {
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&to_jsonl(rows)))
        .map_err(|e| IoError::io(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    let file = fs::File::open(path).map_err(|e| IoError::io(path, e))?;
    let mut rows = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| IoError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line).map_err(|source| IoError::Json {
            path: path.to_path_buf(),
            line: n + 1,
            source,
        })?);
    }
    Ok(rows)
}

pub fn sft_file_name() -> &'static str {
    "sft-cumulative.jsonl"
}

pub fn sft_round_file_name(round: usize) -> String {
    format!("sft-round-{round}.jsonl")
}

pub fn dpo_file_name(round: usize) -> String {
    format!("dpo-round-{round}.jsonl")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedFiles {
    pub sft: PathBuf,
    /// `None` when the round produced no preference tuples.
    pub dpo: Option<PathBuf>,
}

/// Writes `sft-cumulative.jsonl` (every round so far) and, when `tuples` is
/// non-empty, `dpo-round-<round>.jsonl` with that round's tuples only.
pub fn emit_datasets(
    dir: &Path,
    sft: &SftDataset,
    round: usize,
    tuples: &[PreferenceTuple],
) -> Result<EmittedFiles, IoError> {
    fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    let sft_path = dir.join(sft_file_name());
    write_jsonl(&sft_path, sft.examples())?;
    let dpo_path = dir.join(dpo_file_name(round));
    let dpo = if tuples.is_empty() {
        if dpo_path.exists() {
            fs::remove_file(&dpo_path).map_err(|e| IoError::io(&dpo_path, e))?;
        }
        None
    } else {
        write_jsonl(&dpo_path, tuples)?;
        Some(dpo_path)
    };
    Ok(EmittedFiles { sft: sft_path, dpo })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ex(i: usize, round: usize) -> SftExample {
        SftExample {
            state: format!("s{i}"),
            tactic: "refl".into(),
            statement_id: format!("g{i}"),
            round,
            pos: 0,
        }
    }

    #[test]
    fn cumulative_file_accumulates_rounds() {
        let dir = tempfile::tempdir().unwrap();
        let mut sft = SftDataset::new();
        (0..10).for_each(|i| assert!(sft.push(ex(i, 1))));
        emit_datasets(dir.path(), &sft, 1, &[]).unwrap();
        (10..25).for_each(|i| assert!(sft.push(ex(i, 2))));
        let files = emit_datasets(dir.path(), &sft, 2, &[]).unwrap();
        let text = fs::read_to_string(&files.sft).unwrap();
        assert_eq!(text.lines().count(), 25);
        assert_eq!(files.dpo, None);
        assert!(!dir.path().join("dpo-round-2.jsonl").exists());
    }

    #[test]
    fn repeats_are_counted_not_duplicated() {
        let mut sft = SftDataset::new();
        assert!(sft.push(ex(0, 1)));
        assert!(!sft.push(ex(0, 2)));
        assert_eq!(sft.len(), 1);
        assert_eq!(sft.multiplicity("s0", "refl"), 2);
        assert_eq!(sft.examples()[0].round, 1);
        assert_eq!(sft.total_with_repeats(), 2);
    }

    #[test]
    fn field_names_match_the_file_schema() {
        let v = serde_json::to_value(ex(3, 4)).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys.len(), 5);
        for k in ["state", "tactic", "statement_id", "round", "pos"] {
            assert!(v.get(k).is_some(), "{k}");
        }
        let t = PreferenceTuple {
            state: "s".into(),
            chosen: "a".into(),
            rejected: "b".into(),
            error: "e".into(),
            round: 1,
        };
        let v = serde_json::to_value(&t).unwrap();
        for k in ["state", "chosen", "rejected", "error", "round"] {
            assert!(v.get(k).is_some(), "{k}");
        }
    }

    proptest! {
        #[test]
        fn jsonl_round_trip(rows in proptest::collection::vec(
            (".*", ".*", "[a-z0-9]{1,6}", 0usize..50, 0usize..40), 0..20)
        ) {
            let rows: Vec<SftExample> = rows
                .into_iter()
                .map(|(state, tactic, statement_id, round, pos)| SftExample { state, tactic, statement_id, round, pos })
                .collect();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("x.jsonl");
            write_jsonl(&path, &rows).unwrap();
            let back: Vec<SftExample> = read_jsonl(&path).unwrap();
            prop_assert_eq!(back, rows);
        }
    }
}
