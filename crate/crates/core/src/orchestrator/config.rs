//! Campaign configuration files and the backends they name.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::environment::peano::vocabulary;
use crate::environment::remote::RemoteEnvironment;
use crate::environment::{Environment, PeanoEnvironment};
use crate::error::IoError;
use crate::orchestrator::{CampaignSettings, PoolConfig};
use crate::policy::remote::RemotePolicy;
use crate::policy::{Policy, TabularPolicy};
use crate::search::SearchConfig;

/// Hands each prover worker its policy and environment.
pub trait BackendFactory: Sync {
    fn policy(&self, endpoint: &str) -> Result<Arc<dyn Policy>, String>;
    fn environment(&self) -> Result<Arc<dyn Environment>, String>;
}

/// A policy endpoint as written in a config file.
///
/// * `uniform`: uniform over the Peano vocabulary
/// * `tabular:<path>`: a table file (relative to the config file)
/// * `tcp://<host:port>`: a generation server
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EndpointSpec {
    Uniform,
    Tabular(PathBuf),
    Tcp(String),
}

impl FromStr for EndpointSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "uniform" {
            Ok(EndpointSpec::Uniform)
        } else if let Some(p) = s.strip_prefix("tabular:") {
            Ok(EndpointSpec::Tabular(PathBuf::from(p)))
        } else if let Some(a) = s.strip_prefix("tcp://") {
            Ok(EndpointSpec::Tcp(a.to_string()))
        } else {
            Err(format!("unrecognised policy endpoint `{s}`"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvironmentSpec {
    #[default]
    Peano,
    /// An environment server; every prover opens its own session.
    Tcp(String),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    pub pool: PoolConfig,
    pub environment: EnvironmentSpec,
    pub search: SearchConfig,
    #[serde(flatten)]
    pub settings: CampaignSettings,
}

impl CampaignConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
        Self::from_json(&text).map_err(|source| IoError::Json {
            path: path.to_path_buf(),
            line: source.line(),
            source,
        })
    }
}

/// Builds backends from [`EndpointSpec`] strings and an [`EnvironmentSpec`].
/// Tabular files are loaded once and shared; TCP endpoints get one client per
/// worker.
pub struct SpecBackends {
    environment: EnvironmentSpec,
    base_dir: PathBuf,
    tables: Mutex<HashMap<PathBuf, Arc<TabularPolicy>>>,
}

impl SpecBackends {
    pub fn new(environment: EnvironmentSpec, base_dir: impl Into<PathBuf>) -> Self {
        SpecBackends {
            environment,
            base_dir: base_dir.into(),
            tables: Mutex::new(HashMap::new()),
        }
    }
}

impl BackendFactory for SpecBackends {
    fn policy(&self, endpoint: &str) -> Result<Arc<dyn Policy>, String> {
        match endpoint.parse::<EndpointSpec>()? {
            EndpointSpec::Uniform => Ok(Arc::new(
                TabularPolicy::uniform(&vocabulary()).map_err(|e| e.to_string())?,
            )),
            EndpointSpec::Tcp(addr) => Ok(Arc::new(RemotePolicy::new(addr))),
            EndpointSpec::Tabular(p) => {
                let path = self.base_dir.join(p);
                let mut tables = self.tables.lock().unwrap_or_else(|e| e.into_inner());
                if let Some(t) = tables.get(&path) {
                    return Ok(t.clone());
                }
                let table = Arc::new(TabularPolicy::load(&path).map_err(|e| e.to_string())?);
                tables.insert(path, table.clone());
                Ok(table)
            }
        }
    }

    fn environment(&self) -> Result<Arc<dyn Environment>, String> {
        Ok(match &self.environment {
            EnvironmentSpec::Peano => Arc::new(PeanoEnvironment),
            EnvironmentSpec::Tcp(addr) => Arc::new(RemoteEnvironment::new(addr.clone())),
        })
    }
}
