use std::path::Path;
use std::process::Command;

fn run(bin: &str, args: &[&str]) -> String {
    let out = Command::new(bin).args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "{bin} {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn corpus_campaign_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    let report = dir.path().join("report.json");
    run(env!("CARGO_BIN_EXE_prover-tools"), &["gen-corpus", "--count", "20", "--out", p(&corpus)]);
    let summary = run(
        env!("CARGO_BIN_EXE_prove"),
        &["--corpus", p(&corpus), "--out", p(&report), "--passes", "4", "--workers", "2"],
    );
    assert!(summary.contains("proved"), "{summary}");

    let csv = dir.path().join("k.csv");
    let svg = dir.path().join("k.svg");
    let json = run(
        env!("CARGO_BIN_EXE_eval"),
        &["pass-at-k", "--reports", p(&report), "--k", "1,2,4", "--block-size", "1", "--resamples", "10",
          "--out-csv", p(&csv), "--out-svg", p(&svg)],
    );
    assert!(json.contains("solve_rate"));
    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("k,solve_rate,band_min,band_max,theorems"));
    assert_eq!(table.lines().count(), 4);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    run(env!("CARGO_BIN_EXE_eval"), &["union", "--reports", p(&report), p(&report)]);
}

#[test]
fn iterate_then_distributions() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    let out = dir.path().join("rounds");
    run(env!("CARGO_BIN_EXE_prover-tools"), &["gen-corpus", "--count", "30", "--seed", "4", "--out", p(&corpus)]);
    run(
        env!("CARGO_BIN_EXE_prover-tools"),
        &["iterate", "--corpus", p(&corpus), "--rounds", "2", "--out-dir", p(&out), "--modes", "sft,dpo",
          "--max-expansions", "60", "--beam-width", "2"],
    );
    for f in ["rounds.json", "corpus-status.jsonl", "policy-round-2.json", "sft-round-1.jsonl"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let lengths = dir.path().join("lengths.csv");
    run(
        env!("CARGO_BIN_EXE_eval"),
        &["lengths", "--datasets", p(&out.join("sft-round-1.jsonl")), p(&out.join("sft-round-2.jsonl")),
          "--out-csv", p(&lengths)],
    );
    assert!(std::fs::read_to_string(&lengths).unwrap().starts_with("round,bin,count"));
    let tokens = run(env!("CARGO_BIN_EXE_eval"), &["tokens", "--datasets", p(&out.join("sft-round-1.jsonl"))]);
    assert!(tokens.contains("percent"));
}

#[test]
fn bad_input_fails_cleanly() {
    let out = Command::new(env!("CARGO_BIN_EXE_eval"))
        .args(["pass-at-k", "--reports", "/nonexistent/report.json"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/report.json"));
}
