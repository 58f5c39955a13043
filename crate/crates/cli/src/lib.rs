//! Helpers shared by the `prove`, `eval` and `prover-tools` binaries.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use prover_core::environment::peano::vocabulary;
use prover_core::orchestrator::{CampaignReport, EndpointSpec};
use prover_core::policy::remote::RemotePolicy;
use prover_core::policy::{Policy, TabularPolicy};
use tracing_subscriber::EnvFilter;

/// Logs to stderr, filtered by `RUST_LOG` (default `info`).
pub fn init_logging() {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .try_init();
}

pub fn read_report(path: &Path) -> Result<CampaignReport> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    CampaignReport::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Parses a comma-separated list of positive integers.
pub fn parse_k_list(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}")))
        .collect()
}

/// A tabular policy from an endpoint spec (`uniform` or `tabular:<path>`).
pub fn load_tabular(spec: &str) -> Result<TabularPolicy> {
    match spec.parse::<EndpointSpec>().map_err(anyhow::Error::msg)? {
        EndpointSpec::Uniform => Ok(TabularPolicy::uniform(&vocabulary())?),
        EndpointSpec::Tabular(path) => Ok(TabularPolicy::load(&path)?),
        EndpointSpec::Tcp(_) => anyhow::bail!("`{spec}` is not a tabular policy"),
    }
}

/// Any endpoint spec as a policy.
pub fn load_policy(spec: &str) -> Result<Arc<dyn Policy>> {
    match spec.parse::<EndpointSpec>().map_err(anyhow::Error::msg)? {
        EndpointSpec::Tcp(addr) => Ok(Arc::new(RemotePolicy::new(addr))),
        _ => Ok(Arc::new(load_tabular(spec)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_lists() {
        assert_eq!(parse_k_list("64,128, 256"), Ok(vec![64, 128, 256]));
        assert!(parse_k_list("1,x").is_err());
    }

    #[test]
    fn policy_specs() {
        assert!(load_tabular("uniform").is_ok());
        assert!(load_tabular("tcp://127.0.0.1:1").is_err());
        assert!(load_policy("tcp://127.0.0.1:1").is_ok());
    }
}
