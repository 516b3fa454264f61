//! z-score and p-value tables over a finished matrix.
//!
//! For each (environment, algorithm, N) group, every regularizer is
//! represented by its best λ, chosen by mean final-window return across
//! seeds. The baseline and the chosen variants form one population whose
//! per-run scores are standardized; each method's z-score is the mean over
//! its seeds. Each regularizer's per-seed z-scores are compared against the
//! baseline's with Welch's t-test.

use std::collections::BTreeMap;

use qdiv_core::agents::{Algorithm, RegularizerChoice};
use qdiv_core::stats::{welch_t_test, z_scores, ScorePopulation};

use crate::error::{HarnessError, Result};
use crate::matrix::RunManifest;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroupKey {
    pub environment: String,
    pub algorithm: Algorithm,
    pub ensemble_size: usize,
}

impl GroupKey {
    pub fn label(&self) -> String {
        format!("{}/{}/N={}", self.environment, self.algorithm.label(), self.ensemble_size)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodStats {
    pub regularizer: RegularizerChoice,
    /// `None` for the baseline.
    pub lambda: Option<f64>,
    pub mean_return: f64,
    pub z: f64,
    /// Welch p-value against the baseline; `None` for the baseline itself.
    pub p: Option<f64>,
    pub t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupStats {
    pub key: GroupKey,
    pub methods: Vec<MethodStats>,
}

impl GroupStats {
    pub fn baseline(&self) -> Option<&MethodStats> {
        self.methods.iter().find(|m| m.regularizer == RegularizerChoice::None)
    }

    /// Regularized variant with the highest z-score.
    pub fn best_regularized(&self) -> Option<&MethodStats> {
        self.methods
            .iter()
            .filter(|m| m.regularizer != RegularizerChoice::None)
            .fold(None, |best: Option<&MethodStats>, m| match best {
                Some(b) if b.z >= m.z => Some(b),
                _ => Some(m),
            })
    }
}

/// Completed runs' final returns keyed by group, then (regularizer, λ bits),
/// in manifest order.
type Grouped = BTreeMap<GroupKey, Vec<((RegularizerChoice, u64), Vec<(u64, f64)>)>>;

fn group(manifest: &RunManifest) -> Grouped {
    let mut out: Grouped = BTreeMap::new();
    for (entry, summary) in manifest.completed() {
        let c = &entry.cell;
        let key = GroupKey {
            environment: manifest.environment.clone(),
            algorithm: c.algorithm,
            ensemble_size: c.ensemble_size,
        };
        let methods = out.entry(key).or_default();
        let mkey = (c.regularizer, c.lambda.to_bits());
        match methods.iter_mut().find(|(k, _)| *k == mkey) {
            Some((_, v)) => v.push((c.seed, summary.final_return)),
            None => methods.push((mkey, vec![(c.seed, summary.final_return)])),
        }
    }
    out
}

fn mean(xs: &[(u64, f64)]) -> f64 {
    xs.iter().map(|x| x.1).sum::<f64>() / xs.len() as f64
}

pub fn compute(manifest: &RunManifest) -> Result<Vec<GroupStats>> {
    let mut groups = Vec::new();
    for (key, methods) in group(manifest) {
        // best λ per regularizer; earlier entries win ties
        let mut chosen: Vec<(RegularizerChoice, Option<f64>, Vec<(u64, f64)>)> = Vec::new();
        for ((reg, lbits), runs) in methods {
            let lambda = (reg != RegularizerChoice::None).then(|| f64::from_bits(lbits));
            match chosen.iter_mut().find(|c| c.0 == reg) {
                Some(c) if mean(&runs) > mean(&c.2) => *c = (reg, lambda, runs),
                Some(_) => {}
                None => chosen.push((reg, lambda, runs)),
            }
        }
        let mut pop = ScorePopulation::new();
        let label = |r: RegularizerChoice| r.label().to_string();
        for (reg, _, runs) in &chosen {
            for &(seed, v) in runs {
                pop.push(label(*reg), seed, v);
            }
        }
        let z = z_scores(&pop)?;
        let per_seed = |r: RegularizerChoice| z.samples_of(&pop, &label(r)).collect::<Vec<f64>>();
        let has_baseline = chosen.iter().any(|c| c.0 == RegularizerChoice::None);
        let base_z = per_seed(RegularizerChoice::None);
        let mut out = Vec::new();
        for (reg, lambda, runs) in &chosen {
            let (p, t) = if *reg != RegularizerChoice::None && has_baseline {
                let r = welch_t_test(&per_seed(*reg), &base_z)?;
                (Some(r.p), Some(r.t))
            } else {
                (None, None)
            };
            out.push(MethodStats {
                regularizer: *reg,
                lambda: *lambda,
                mean_return: mean(runs),
                z: z.method(&label(*reg)).expect("method present"),
                p,
                t,
            });
        }
        groups.push(GroupStats { key, methods: out });
    }
    if groups.is_empty() {
        return Err(HarnessError::Config("manifest has no completed runs".into()));
    }
    Ok(groups)
}

fn method_label(r: RegularizerChoice) -> &'static str {
    match r {
        RegularizerChoice::None => "baseline",
        r => r.label(),
    }
}

fn table(groups: &[GroupStats], cell: impl Fn(&MethodStats) -> Option<f64>, with_baseline: bool) -> String {
    let mut rows: Vec<RegularizerChoice> = Vec::new();
    for g in groups {
        for m in &g.methods {
            if (with_baseline || m.regularizer != RegularizerChoice::None) && !rows.contains(&m.regularizer) {
                rows.push(m.regularizer);
            }
        }
    }
    rows.sort();
    let mut out = String::from("method");
    for g in groups {
        out.push(',');
        out.push_str(&g.key.label());
    }
    out.push('\n');
    for r in rows {
        out.push_str(method_label(r));
        for g in groups {
            out.push(',');
            if let Some(v) = g.methods.iter().find(|m| m.regularizer == r).and_then(&cell) {
                out.push_str(&v.to_string());
            }
        }
        out.push('\n');
    }
    out
}

/// Rows are methods (baseline first), columns are groups.
pub fn z_table(groups: &[GroupStats]) -> String {
    table(groups, |m| Some(m.z), true)
}

/// Welch p-values against the baseline; rows are regularizers.
pub fn p_table(groups: &[GroupStats]) -> String {
    table(groups, |m| m.p, false)
}

/// λ chosen for each regularizer, per group.
pub fn lambda_table(groups: &[GroupStats]) -> String {
    table(groups, |m| m.lambda, false)
}
