//! CKA heatmaps at fixed step intervals during one ensemble run, joined
//! with the evaluation return at each checkpoint.

use std::path::{Path, PathBuf};

use qdiv_core::agents::Agent;
use qdiv_core::rng::{self, tag};
use qdiv_core::similarity::{heatmap, SimilarityHeatmap};

use crate::config::ExperimentConfig;
use crate::error::{write_file, HarnessError, Result};
use crate::matrix::{mean_pairwise_cka, probe_batch, Cell};

#[derive(Debug, Clone)]
pub struct TimelinePoint {
    pub checkpoint: usize,
    pub step: u64,
    pub heatmap: SimilarityHeatmap,
    /// Mean corresponding-layer CKA over every member pair.
    pub mean_cka: Option<f64>,
    pub return_mean: f64,
}

/// Trains `cell` and records a heatmap every `every_k` steps, giving
/// `floor(total_steps / every_k)` checkpoints.
pub fn similarity_timeline(cfg: &ExperimentConfig, cell: &Cell, every_k: u64) -> Result<Vec<TimelinePoint>> {
    if every_k == 0 {
        return Err(HarnessError::Config("checkpoint interval must be positive".into()));
    }
    if cell.ensemble_size < 2 {
        return Err(HarnessError::Config("a similarity timeline needs at least 2 members".into()));
    }
    let e = &cfg.experiment;
    let seed = cell.seed;
    let mut env = cfg.environment.build(rng::derive_seed(seed, &[tag::ENV]))?;
    let mut eval_env = cfg.environment.build(rng::derive_seed(seed, &[tag::EVAL_ENV]))?;
    // checkpoint evaluations use their own environment instance
    let mut ckpt_env = cfg.environment.build(rng::derive_seed(seed, &[tag::EVAL_ENV, 1]))?;
    let mut agent = Agent::new(cell.agent_config(&cfg.agent), env.observation_len(), env.num_actions(), seed)?;

    let mut points = Vec::new();
    agent.train_with_hook(env.as_mut(), eval_env.as_mut(), e.total_steps, e.eval_every, |a, step| {
        if step % every_k != 0 {
            return Ok(());
        }
        let checkpoint = points.len() + 1;
        let probe = probe_batch(a, e.probe_size, seed, checkpoint as u64)?.ok_or(qdiv_core::Error::NotReady { have: a.buffer().len(), need: 2 })?;
        let nets: Vec<_> = a.members().iter().map(|m| &m.online).collect();
        points.push(TimelinePoint {
            checkpoint,
            step,
            heatmap: heatmap(nets[0], nets[1], &probe)?,
            mean_cka: mean_pairwise_cka(&nets, &probe)?,
            return_mean: a.evaluate(ckpt_env.as_mut())?.mean,
        });
        Ok(())
    })?;
    Ok(points)
}

/// `checkpoint, step, mean_cka, return_mean`.
pub fn timeline_csv(points: &[TimelinePoint]) -> String {
    let mut out = String::from("checkpoint,step,mean_cka,return_mean\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.checkpoint,
            p.step,
            p.mean_cka.map(|v| v.to_string()).unwrap_or_default(),
            p.return_mean
        ));
    }
    out
}

/// Writes `timeline.csv` and one heatmap CSV per checkpoint under `dir`.
pub fn write_timeline(dir: &Path, points: &[TimelinePoint]) -> Result<Vec<PathBuf>> {
    let mut written = vec![dir.join("timeline.csv")];
    write_file(&written[0], &timeline_csv(points))?;
    for p in points {
        let path = dir.join("heatmaps").join(format!("checkpoint_{:04}.csv", p.checkpoint));
        write_file(&path, &p.heatmap.to_csv())?;
        written.push(path);
    }
    Ok(written)
}
