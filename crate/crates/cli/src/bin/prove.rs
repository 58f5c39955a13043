//! Runs a proof-search campaign over a goal corpus and writes its report.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;
use prover_cli::{init_logging, write_text};
use prover_core::environment::corpus::read_corpus;
use prover_core::orchestrator::{run_campaign, CampaignConfig, CampaignTheorem, SpecBackends};
use prover_core::presets::{self, Preset};

#[derive(Parser)]
#[command(name = "prove", about = "Run seeded search passes over a corpus")]
struct Args {
    /// JSONL corpus, one `{"id", "goal"}` object per line.
    #[arg(long)]
    corpus: PathBuf,
    /// Campaign configuration (JSON). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Where to write the campaign report (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Use a named preset's search settings and pass count.
    #[arg(long)]
    preset: Option<String>,
    /// Override the configured α.
    #[arg(long)]
    alpha: Option<f64>,
    /// Override the pass count K.
    #[arg(long)]
    passes: Option<usize>,
    /// Override the global seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the prover count.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> Result<()> {
    init_logging();
    let args = Args::parse();
    let (mut config, base_dir) = match &args.config {
        Some(path) => (
            CampaignConfig::load(path)?,
            path.parent().map(PathBuf::from).unwrap_or_default(),
        ),
        None => (CampaignConfig::default(), PathBuf::new()),
    };
    if let Some(name) = &args.preset {
        match presets::by_name(name) {
            Some(Preset::Eval(p)) => {
                config.search = p.search;
                config.settings.passes = p.passes;
            }
            Some(Preset::Collect(_)) => anyhow::bail!("`{name}` is a collection preset; use prover-tools iterate"),
            None => anyhow::bail!("unknown preset `{name}`"),
        }
    }
    if let Some(a) = args.alpha {
        config.search.alpha = a;
    }
    if let Some(k) = args.passes {
        config.settings.passes = k;
    }
    if let Some(s) = args.seed {
        config.settings.global_seed = s;
    }
    if let Some(w) = args.workers {
        config.pool.num_provers = w;
    }

    let theorems: Vec<CampaignTheorem> = read_corpus(&args.corpus)?
        .into_iter()
        .map(|g| CampaignTheorem { id: g.id, goal: g.goal })
        .collect();
    let backends = SpecBackends::new(config.environment.clone(), base_dir);
    let report = run_campaign(&theorems, &config.pool, &config.search, &config.settings, &backends)
        .context("campaign failed")?;
    write_text(&args.out, &report.to_json())?;
    println!(
        "{} / {} proved ({:.2}%), {} generation calls over {} passes",
        report.proved_ids().len(),
        report.theorems.len(),
        100.0 * report.solve_rate(),
        report.ledger.generation_calls,
        report.ledger.passes
    );
    Ok(())
}
