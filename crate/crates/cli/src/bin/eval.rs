//! Evaluation of campaign reports and datasets.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use prover_cli::{init_logging, parse_k_list, read_report, write_text};
use prover_core::eval::plot::{Artifact, Format};
use prover_core::eval::{
    accumulative_union, lengths_from_examples, pass_at_k, proof_length_stats, tactic_token_stats,
    BandOptions,
};
use prover_core::expert::dataset::read_jsonl;
use prover_core::expert::SftExample;

#[derive(Parser)]
#[command(name = "eval", about = "pass@K curves, unions and dataset distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Outputs {
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_svg: Option<PathBuf>,
}

impl Outputs {
    fn emit(&self, artifact: Artifact<'_>) -> Result<()> {
        if let Some(p) = &self.out_csv {
            write_text(p, &artifact.render(Format::Csv)?)?;
        }
        if let Some(p) = &self.out_svg {
            write_text(p, &artifact.render(Format::Svg)?)?;
        }
        Ok(())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve rate within the first k passes, with min–max bands.
    PassAtK {
        #[arg(long, num_args = 1.., required = true)]
        reports: Vec<PathBuf>,
        /// Comma-separated pass counts.
        #[arg(long, default_value = "64,128,256,1024,2048,4096")]
        k: String,
        #[arg(long, default_value_t = 64)]
        block_size: usize,
        #[arg(long, default_value_t = 200)]
        resamples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Outputs,
    },
    /// Union of proved sets across reports (e.g. one per α).
    Union {
        #[arg(long, num_args = 1.., required = true)]
        reports: Vec<PathBuf>,
        #[command(flatten)]
        out: Outputs,
    },
    /// Proof-length histograms per round from per-round SFT files.
    Lengths {
        #[arg(long, num_args = 1.., required = true)]
        datasets: Vec<PathBuf>,
        #[command(flatten)]
        out: Outputs,
    },
    /// Tactic token-count histograms per round.
    Tokens {
        #[arg(long, num_args = 1.., required = true)]
        datasets: Vec<PathBuf>,
        #[command(flatten)]
        out: Outputs,
    },
}

fn read_examples(paths: &[PathBuf]) -> Result<Vec<SftExample>> {
    let mut all = Vec::new();
    for p in paths {
        all.extend(read_jsonl::<SftExample>(p)?);
    }
    Ok(all)
}

fn read_reports(paths: &[PathBuf]) -> Result<Vec<prover_core::orchestrator::CampaignReport>> {
    paths.iter().map(|p| read_report(Path::new(p))).collect()
}

fn main() -> Result<()> {
    init_logging();
    match Cli::parse().command {
        Command::PassAtK {
            reports,
            k,
            block_size,
            resamples,
            seed,
            out,
        } => {
            let k = parse_k_list(&k).map_err(anyhow::Error::msg)?;
            let options = BandOptions {
                block_size,
                resamples,
                seed,
            };
            let report = pass_at_k(&read_reports(&reports)?, &k, &options).context("pass@K")?;
            out.emit(Artifact::PassAtK(&report))?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Union { reports, out } => {
            let report = accumulative_union(&read_reports(&reports)?)?;
            out.emit(Artifact::Union(&report))?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Lengths { datasets, out } => {
            let hist = proof_length_stats(&lengths_from_examples(&read_examples(&datasets)?))?;
            out.emit(Artifact::Lengths(&hist))?;
            println!("{}", serde_json::to_string_pretty(&hist)?);
        }
        Command::Tokens { datasets, out } => {
            let examples = read_examples(&datasets)?;
            let hist = tactic_token_stats(examples.iter().map(|e| (e.round, e.tactic.as_str())))?;
            out.emit(Artifact::Tokens(&hist))?;
            println!("{}", serde_json::to_string_pretty(&hist)?);
        }
    }
    Ok(())
}
