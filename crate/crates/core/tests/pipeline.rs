use std::collections::BTreeMap;

use prover_core::environment::corpus::generate_goal_corpus;
use prover_core::environment::peano::vocabulary;
use prover_core::environment::PeanoEnvironment;
use prover_core::eval::{lengths_from_examples, proof_length_stats, tactic_token_stats};
use prover_core::expert::dataset::{read_jsonl, sft_round_file_name};
use prover_core::expert::{CollectConfig, Corpus, ExpertIteration, FilterConfig, SftExample, TrainingMode};
use prover_core::policy::TabularPolicy;

#[test]
fn rounds_feed_histograms() {
    let dir = tempfile::tempdir().unwrap();
    let mut policy = TabularPolicy::uniform(&vocabulary()).unwrap();
    let mut ei = ExpertIteration::new(Corpus::from_corpus_goals(&generate_goal_corpus(60, 6, 8)));
    let filter = FilterConfig {
        beam_width: 2,
        max_expansions: 20,
        ..FilterConfig::default()
    };
    for round in 1..=3 {
        let collect = CollectConfig {
            width: 4,
            max_expansions: 80,
            seed: round as u64,
            ..CollectConfig::default()
        };
        ei.beam_filter_round(round, &policy, &PeanoEnvironment, &filter);
        ei.collection_round(round, &policy, &PeanoEnvironment, &collect);
        ei.emit(dir.path(), round).unwrap();
        ei.simulate_policy_update(&mut policy, round, TrainingMode::Dpo, 2.0);
    }

    let mut examples = Vec::new();
    for round in 1..=3 {
        examples.extend(read_jsonl::<SftExample>(&dir.path().join(sft_round_file_name(round))).unwrap());
    }
    let hist = proof_length_stats(&lengths_from_examples(&examples)).unwrap();
    let by_round: BTreeMap<usize, usize> = hist.iter().map(|h| (h.round, h.count)).collect();
    for r in ei.reports() {
        assert_eq!(by_round.get(&r.round).copied().unwrap_or(0), r.proved_count, "round {}", r.round);
    }

    // token recount: whitespace split, independent of the binning code
    let tokens = tactic_token_stats(examples.iter().map(|e| (e.round, e.tactic.as_str()))).unwrap();
    for h in &tokens {
        let mut expect = [0usize; 4];
        for e in examples.iter().filter(|e| e.round == h.round) {
            let n = e.tactic.split_whitespace().count();
            expect[match n {
                0 => 0,
                1..=10 => 1,
                11..=50 => 2,
                _ => 3,
            }] += 1;
        }
        assert_eq!(h.counts, expect);
        assert_eq!(h.total, expect.iter().sum::<usize>());
        assert!((h.percent.iter().sum::<f64>() - 100.0).abs() < 1e-9);
    }
}
