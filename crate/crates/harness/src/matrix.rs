//! Seed matrices: planning, running and recording experiment cells.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use qdiv_core::agents::{Agent, AgentConfig, Algorithm, RegularizerChoice, TrainingRecord};
use qdiv_core::autodiff::Tensor;
use qdiv_core::nn::Mlp;
use qdiv_core::rng::{self, tag};
use qdiv_core::similarity::{heatmap, SimilarityHeatmap};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{io_err, write_file, HarnessError, Result};
use crate::output::{norm_csv, norm_log, training_csv, NormRow};

/// Rule used to pick the best λ per regularizer and to score runs.
pub const SELECTION_RULE: &str = "final_window_mean_return";

/// One (algorithm, regularizer, λ, seed) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub algorithm: Algorithm,
    pub ensemble_size: usize,
    pub regularizer: RegularizerChoice,
    pub lambda: f64,
    pub seed: u64,
}

impl Cell {
    pub fn baseline(algorithm: Algorithm, ensemble_size: usize, seed: u64) -> Cell {
        Cell {
            algorithm,
            ensemble_size,
            regularizer: RegularizerChoice::None,
            lambda: 0.0,
            seed,
        }
    }

    /// `baseline`, or the regularizer and λ, e.g. `gini@1e-6`.
    pub fn method(&self) -> String {
        match self.regularizer {
            RegularizerChoice::None => "baseline".into(),
            r => format!("{}@{:e}", r.label(), self.lambda),
        }
    }

    pub fn id(&self) -> String {
        let m = match self.regularizer {
            RegularizerChoice::None => "baseline".to_string(),
            r => format!("{}-l{:e}", r.label(), self.lambda),
        };
        format!("{}-n{}-{}-s{}", self.algorithm.label(), self.ensemble_size, m, self.seed)
    }

    pub fn agent_config(&self, base: &AgentConfig) -> AgentConfig {
        AgentConfig {
            algorithm: self.algorithm,
            ensemble_size: self.ensemble_size,
            regularizer: self.regularizer,
            lambda: self.lambda,
            ..base.clone()
        }
    }
}

/// Cells in run order: algorithm, then method, then seed.
pub fn plan_cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let e = &cfg.experiment;
    let mut cells = Vec::new();
    for &alg in &e.algorithms {
        let n = if alg.is_ensemble() { cfg.agent.ensemble_size } else { 1 };
        let mut methods = Vec::new();
        if e.include_baseline {
            methods.push((RegularizerChoice::None, 0.0));
        }
        if alg.is_ensemble() && n >= 2 {
            for &r in &e.regularizers {
                for &l in &e.lambdas {
                    methods.push((r, l));
                }
            }
        }
        for (regularizer, lambda) in methods {
            for &seed in &e.seeds {
                cells.push(Cell {
                    algorithm: alg,
                    ensemble_size: n,
                    regularizer,
                    lambda,
                    seed,
                });
            }
        }
    }
    cells
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// Mean evaluation return over the trailing window.
    pub final_return: f64,
    /// Mean evaluation return over every evaluation point.
    pub auc: f64,
    pub final_gini: Option<f64>,
    pub initial_mean_cka: Option<f64>,
    pub final_mean_cka: Option<f64>,
    pub final_norms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Pending,
    Completed,
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub id: String,
    pub method: String,
    pub cell: Cell,
    #[serde(flatten)]
    pub status: RunStatus,
    /// Paths relative to the manifest's directory.
    pub artifacts: Vec<PathBuf>,
    pub summary: Option<RunSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    pub environment: String,
    /// Resolved config as canonical TOML.
    pub config: String,
    pub selection_rule: String,
    pub runs: Vec<RunEntry>,
}

impl RunManifest {
    pub fn failures(&self) -> usize {
        self.runs
            .iter()
            .filter(|r| matches!(r.status, RunStatus::Failed { .. }))
            .count()
    }

    pub fn completed(&self) -> impl Iterator<Item = (&RunEntry, &RunSummary)> {
        self.runs.iter().filter_map(|r| match (&r.status, &r.summary) {
            (RunStatus::Completed, Some(s)) => Some((r, s)),
            _ => None,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&crate::error::read_file(path)?)?)
    }
}

/// Everything one run produces, before it is written to disk.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub cell: Cell,
    pub records: Vec<TrainingRecord>,
    pub norm_rows: Option<Vec<NormRow>>,
    pub heatmap_initial: Option<SimilarityHeatmap>,
    pub heatmap_final: Option<SimilarityHeatmap>,
    pub summary: RunSummary,
    pub agent: Agent,
}

/// Up to `size` replay states for CKA probes, drawn from a dedicated stream
/// so the training trajectory is unaffected.
pub fn probe_batch(agent: &Agent, size: usize, seed: u64, salt: u64) -> qdiv_core::Result<Option<Tensor>> {
    let size = size.min(agent.buffer().len());
    if size < 2 {
        return Ok(None);
    }
    let mut r = rng::stream(seed, &[tag::PROBE, salt]);
    let picked = agent.buffer().sample_with(&mut r, size)?;
    let rows: Vec<&[f64]> = picked.iter().map(|t| t.s.as_slice()).collect();
    Ok(Some(Tensor::from_rows(&rows)?))
}

/// Mean corresponding-layer CKA averaged over every member pair.
pub fn mean_pairwise_cka(nets: &[&Mlp], probe: &Tensor) -> qdiv_core::Result<Option<f64>> {
    let mut vals = Vec::new();
    for i in 0..nets.len() {
        for j in i + 1..nets.len() {
            if let Some(v) = heatmap(nets[i], nets[j], probe)?.mean_corresponding() {
                vals.push(v);
            }
        }
    }
    Ok((!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64))
}

fn window_mean(records: &[TrainingRecord], window: usize) -> f64 {
    if records.is_empty() {
        return f64::NAN;
    }
    let tail = &records[records.len().saturating_sub(window)..];
    tail.iter().map(|r| r.return_mean).sum::<f64>() / tail.len() as f64
}

pub fn run_cell(cfg: &ExperimentConfig, cell: &Cell) -> Result<RunOutcome> {
    let e = &cfg.experiment;
    let seed = cell.seed;
    let mut env = cfg.environment.build(rng::derive_seed(seed, &[tag::ENV]))?;
    let mut eval_env = cfg.environment.build(rng::derive_seed(seed, &[tag::EVAL_ENV]))?;
    let agent_cfg = cell.agent_config(&cfg.agent);
    let (obs, actions) = (env.observation_len(), env.num_actions());
    let initial = Agent::new(agent_cfg.clone(), obs, actions, seed)?;
    let mut agent = initial.clone();
    let records = agent.train(env.as_mut(), eval_env.as_mut(), e.total_steps, e.eval_every)?;

    let ensemble = agent.members().len() >= 2;
    let norm_rows = if ensemble { Some(norm_log(&records)?) } else { None };
    let probe = if ensemble { probe_batch(&agent, e.probe_size, seed, 0)? } else { None };

    let (mut heatmap_initial, mut heatmap_final) = (None, None);
    let (mut initial_mean_cka, mut final_mean_cka) = (None, None);
    if let Some(p) = &probe {
        let online = |a: &Agent| a.members().iter().map(|m| m.online.clone()).collect::<Vec<_>>();
        let (n0, n1) = (online(&initial), online(&agent));
        heatmap_initial = Some(heatmap(&n0[0], &n0[1], p)?);
        heatmap_final = Some(heatmap(&n1[0], &n1[1], p)?);
        initial_mean_cka = mean_pairwise_cka(&n0.iter().collect::<Vec<_>>(), p)?;
        final_mean_cka = mean_pairwise_cka(&n1.iter().collect::<Vec<_>>(), p)?;
    }

    let summary = RunSummary {
        final_return: window_mean(&records, e.final_window),
        auc: window_mean(&records, records.len()),
        final_gini: norm_rows.as_ref().and_then(|r| r.last()).map(|r| r.gini),
        initial_mean_cka,
        final_mean_cka,
        final_norms: agent.norms(),
    };
    Ok(RunOutcome {
        cell: cell.clone(),
        records,
        norm_rows,
        heatmap_initial,
        heatmap_final,
        summary,
        agent,
    })
}

/// Writes a run's artifacts under `root/runs/<id>/` and returns their paths
/// relative to `root`.
pub fn write_outcome(root: &Path, outcome: &RunOutcome) -> Result<Vec<PathBuf>> {
    let rel = PathBuf::from("runs").join(outcome.cell.id());
    let mut files = vec![(rel.join("train.csv"), training_csv(&outcome.records, outcome.cell.ensemble_size))];
    if let Some(rows) = &outcome.norm_rows {
        files.push((rel.join("norms.csv"), norm_csv(rows)));
    }
    if let Some(h) = &outcome.heatmap_initial {
        files.push((rel.join("heatmap_initial.csv"), h.to_csv()));
    }
    if let Some(h) = &outcome.heatmap_final {
        files.push((rel.join("heatmap_final.csv"), h.to_csv()));
    }
    for (path, text) in &files {
        write_file(&root.join(path), text)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "run panicked".into())
}

/// Runs `cells`, writing artifacts and a manifest under `root`. Failed runs
/// are recorded and do not stop the others.
pub fn run_cells(cfg: &ExperimentConfig, cells: &[Cell], root: &Path) -> Result<RunManifest> {
    std::fs::create_dir_all(root).map_err(io_err(root))?;
    let snapshot = cfg.to_toml();
    write_file(&root.join("config.toml"), &snapshot)?;
    let manifest = Mutex::new(RunManifest {
        name: cfg.experiment.name.clone(),
        environment: cfg.environment.id().into(),
        config: snapshot,
        selection_rule: SELECTION_RULE.into(),
        runs: cells
            .iter()
            .map(|c| RunEntry {
                id: c.id(),
                method: c.method(),
                cell: c.clone(),
                status: RunStatus::Pending,
                artifacts: vec![],
                summary: None,
            })
            .collect(),
    });
    let manifest_path = root.join("manifest.json");
    write_file(&manifest_path, &manifest.lock().unwrap().to_json())?;

    let threads = match cfg.experiment.max_concurrent {
        0 => rayon::current_num_threads(),
        n => n,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;

    let write_error = Mutex::new(None);
    pool.install(|| {
        cells.par_iter().enumerate().for_each(|(k, cell)| {
            let result = catch_unwind(AssertUnwindSafe(|| {
                let outcome = run_cell(cfg, cell)?;
                let artifacts = write_outcome(root, &outcome)?;
                Ok::<_, HarnessError>((outcome.summary, artifacts))
            }));
            let mut m = manifest.lock().unwrap();
            let entry = &mut m.runs[k];
            match result {
                Ok(Ok((summary, artifacts))) => {
                    entry.status = RunStatus::Completed;
                    entry.summary = Some(summary);
                    entry.artifacts = artifacts;
                }
                Ok(Err(e)) => entry.status = RunStatus::Failed { error: e.to_string() },
                Err(p) => entry.status = RunStatus::Failed { error: panic_message(p) },
            }
            if let Err(e) = write_file(&manifest_path, &m.to_json()) {
                write_error.lock().unwrap().get_or_insert(e);
            }
        })
    });
    if let Some(e) = write_error.into_inner().unwrap() {
        return Err(e);
    }
    Ok(manifest.into_inner().unwrap())
}

/// Plans and runs the full matrix under `experiment.out_dir`.
pub fn run_matrix(cfg: &ExperimentConfig) -> Result<RunManifest> {
    run_cells(cfg, &plan_cells(cfg), &cfg.experiment.out_dir)
}
