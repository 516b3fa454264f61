//! Experiment configuration files.
//!
//! The format is TOML restricted to three sections:
//!
//! ```toml
//! [experiment]
//! seeds = [0, 1, 2, 3, 4]
//! total_steps = 200000
//! eval_every = 5000
//! algorithms = ["maxmin"]
//! regularizers = ["gini", "theil"]
//! lambdas = [1e-5, 1e-6]
//!
//! [environment]
//! kind = "catcher_lite"
//! width = 10
//!
//! [agent]
//! ensemble_size = 2
//! learning_rate = 1e-4
//! ```
//!
//! Every key is optional. Command-line overrides use dotted keys such as
//! `agent.learning_rate=1e-3`.

use std::path::{Path, PathBuf};

use qdiv_core::agents::{AgentConfig, Algorithm, RegularizerChoice};
use qdiv_core::env::EnvConfig;
use serde::{Deserialize, Serialize};

use crate::error::{read_file, HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: String,
    pub seeds: Vec<u64>,
    pub total_steps: u64,
    pub eval_every: u64,
    pub out_dir: PathBuf,
    pub algorithms: Vec<Algorithm>,
    /// Regularizers swept in the matrix; the unregularized baseline is
    /// added separately when `include_baseline` is set.
    pub regularizers: Vec<RegularizerChoice>,
    pub lambdas: Vec<f64>,
    pub include_baseline: bool,
    /// Concurrent runs; 0 uses every available core.
    pub max_concurrent: usize,
    /// Replay states used as the CKA probe batch.
    pub probe_size: usize,
    /// Trailing evaluation points averaged into the final return.
    pub final_window: usize,
    /// Environment steps between similarity checkpoints.
    pub checkpoint_every: u64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            name: "experiment".into(),
            seeds: vec![0, 1, 2, 3, 4],
            total_steps: 200_000,
            eval_every: 5_000,
            out_dir: PathBuf::from("runs"),
            algorithms: vec![Algorithm::Maxmin],
            regularizers: RegularizerChoice::ALL.to_vec(),
            lambdas: vec![1e-5, 1e-6, 1e-7, 1e-8],
            include_baseline: true,
            max_concurrent: 0,
            probe_size: 256,
            final_window: 5,
            checkpoint_every: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub environment: EnvConfig,
    pub agent: AgentConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with(text, &[])
    }

    /// Parses `text`, then applies `key=value` overrides before validation.
    pub fn from_toml_with(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: ExperimentConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        Self::from_toml_with(&read_file(path)?, overrides)
    }

    /// Canonical TOML; identical configs always serialize to the same bytes.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        let fail = |m: &str| Err(HarnessError::Config(m.into()));
        if e.seeds.is_empty() {
            return fail("experiment.seeds must not be empty");
        }
        if e.total_steps == 0 {
            return fail("experiment.total_steps must be positive");
        }
        if e.eval_every == 0 {
            return fail("experiment.eval_every must be positive");
        }
        if e.algorithms.is_empty() {
            return fail("experiment.algorithms must not be empty");
        }
        if e.final_window == 0 {
            return fail("experiment.final_window must be positive");
        }
        if e.probe_size < 2 {
            return fail("experiment.probe_size must be at least 2");
        }
        if e.lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return fail("experiment.lambdas must be finite and non-negative");
        }
        if e.regularizers.contains(&RegularizerChoice::None) {
            return fail("experiment.regularizers lists regularizers only; use include_baseline for the baseline");
        }
        if !e.regularizers.is_empty() && e.lambdas.is_empty() {
            return fail("experiment.lambdas must not be empty when regularizers are swept");
        }
        self.agent.validate()?;
        Ok(())
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| HarnessError::Config(format!("override `{spec}` is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.len() != 2 || path.iter().any(|p| p.is_empty()) {
        return Err(HarnessError::Config(format!(
            "override key `{key}` must look like section.key"
        )));
    }
    let raw = raw.trim();
    // Bare words that are not valid TOML values are taken as strings.
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let section = table
        .entry(path[0].to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    match section {
        toml::Value::Table(t) => {
            t.insert(path[1].to_string(), value);
            Ok(())
        }
        _ => Err(HarnessError::Config(format!("`{}` is not a section", path[0]))),
    }
}
