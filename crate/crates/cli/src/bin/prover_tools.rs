//! Corpus generation, loopback mock servers and a desk-scale expert-iteration
//! driver.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use prover_cli::{init_logging, load_policy, load_tabular, write_text};
use prover_core::environment::corpus::{generate_goal_corpus, read_corpus, write_corpus};
use prover_core::environment::remote::serve_environment;
use prover_core::environment::PeanoEnvironment;
use prover_core::expert::{Corpus, ExpertIteration, TrainingMode};
use prover_core::policy::remote::serve_policy;
use prover_core::presets::paper_collect;

#[derive(Parser)]
#[command(name = "prover-tools", about = "Corpora, mock servers and expert iteration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Sft,
    Dpo,
}

impl From<Mode> for TrainingMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Sft => TrainingMode::Sft,
            Mode::Dpo => TrainingMode::Dpo,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded, oracle-labelled Peano goal corpus.
    GenCorpus {
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 6)]
        max_nesting: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve a policy over the generation protocol.
    ServePolicy {
        #[arg(long, default_value = "127.0.0.1:7001")]
        addr: String,
        /// `uniform` or `tabular:<path>`.
        #[arg(long, default_value = "uniform")]
        policy: String,
        /// Sleep before every reply.
        #[arg(long, default_value_t = 0)]
        delay_ms: u64,
    },
    /// Serve the Peano environment over the environment protocol.
    ServeEnv {
        #[arg(long, default_value = "127.0.0.1:7002")]
        addr: String,
        #[arg(long, default_value_t = 0)]
        delay_ms: u64,
    },
    /// Expert iteration rounds with the collection preset and a simulated
    /// policy update between rounds.
    Iterate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 3)]
        rounds: usize,
        #[arg(long)]
        out_dir: PathBuf,
        /// `uniform` or `tabular:<path>`.
        #[arg(long, default_value = "uniform")]
        policy: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Update mode per round; the last entry repeats.
        #[arg(long, value_enum, value_delimiter = ',', default_value = "sft")]
        modes: Vec<Mode>,
        /// Expansion cap for both phases (the preset's is 600).
        #[arg(long)]
        max_expansions: Option<usize>,
        /// Beam width of the filter phase (the preset's is 32).
        #[arg(long)]
        beam_width: Option<usize>,
        /// Multiplicative weight change of the simulated update.
        #[arg(long, default_value_t = 2.0)]
        update_factor: f64,
    },
}

fn main() -> Result<()> {
    init_logging();
    match Cli::parse().command {
        Command::GenCorpus {
            count,
            max_nesting,
            seed,
            out,
        } => {
            let goals = generate_goal_corpus(count, max_nesting, seed);
            write_corpus(&out, &goals)?;
            let provable = goals.iter().filter(|g| g.provable).count();
            println!("{count} goals ({provable} provable) -> {}", out.display());
        }
        Command::ServePolicy {
            addr,
            policy,
            delay_ms,
        } => {
            let server = serve_policy(&addr, load_policy(&policy)?, Duration::from_millis(delay_ms))
                .with_context(|| format!("binding {addr}"))?;
            println!("policy server on {}", server.addr());
            server.join();
        }
        Command::ServeEnv { addr, delay_ms } => {
            let server = serve_environment(&addr, Arc::new(PeanoEnvironment), Duration::from_millis(delay_ms))
                .with_context(|| format!("binding {addr}"))?;
            println!("environment server on {}", server.addr());
            server.join();
        }
        Command::Iterate {
            corpus,
            rounds,
            out_dir,
            policy,
            seed,
            workers,
            modes,
            max_expansions,
            beam_width,
            update_factor,
        } => {
            let preset = paper_collect();
            let mut filter = preset.filter.clone();
            filter.workers = workers;
            if let Some(n) = max_expansions {
                filter.max_expansions = n;
            }
            if let Some(b) = beam_width {
                filter.beam_width = b;
            }
            let mut policy = load_tabular(&policy)?;
            let mut ei = ExpertIteration::new(Corpus::from_corpus_goals(&read_corpus(&corpus)?));
            for round in 1..=rounds {
                let width = preset.widths[(round - 1) % preset.widths.len()];
                let mut collect = preset.collect_config(width, seed);
                collect.workers = workers;
                if let Some(n) = max_expansions {
                    collect.max_expansions = n;
                }
                ei.beam_filter_round(round, &policy, &PeanoEnvironment, &filter);
                ei.collection_round(round, &policy, &PeanoEnvironment, &collect);
                ei.emit(&out_dir, round)?;
                let mode = modes
                    .get(round - 1)
                    .or(modes.last())
                    .copied()
                    .unwrap_or(Mode::Sft);
                ei.simulate_policy_update(&mut policy, round, mode.into(), update_factor);
                write_text(&out_dir.join(format!("policy-round-{round}.json")), &policy.to_json())?;
                let r = ei.reports().last().expect("round recorded");
                let counts = ei.corpus.counts();
                println!(
                    "round {round}: filtered {}, proved {}, sft +{} ({} new), dpo +{}, unsolved {}",
                    r.filtered_count,
                    r.proved_count,
                    r.sft_examples_added,
                    r.sft_new_pairs,
                    r.preference_tuples_added,
                    counts.unsolved
                );
            }
            write_text(
                &out_dir.join("rounds.json"),
                &serde_json::to_string_pretty(ei.reports())?,
            )?;
            ei.corpus.write(&out_dir.join("corpus-status.jsonl"))?;
        }
    }
    Ok(())
}
