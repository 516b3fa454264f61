//! Inequality measures over the per-member parameter norms ℓ.
//!
//! Each measure is a scalar function of the norm list. The training loss
//! subtracts `λ·I(ℓ)` so that minimizing it pushes the members' norms apart.
//! Gradients are taken with respect to one member's norm `ℓᵢ` with the other
//! entries held fixed; the dependence of the mean `ℓ̄` on `ℓᵢ` is included.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound applied to every norm before logs, powers and division.
pub const NORM_FLOOR: f64 = 1e-12;

/// Per-member norms, floored at [`NORM_FLOOR`].
#[derive(Debug, Clone, PartialEq)]
pub struct NormList {
    values: Vec<f64>,
    mean: f64,
}

impl NormList {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::domain(format!(
                "norm list needs at least 2 members, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::domain(format!("invalid norm {bad}")));
        }
        let values: Vec<f64> = values.into_iter().map(|v| v.max(NORM_FLOOR)).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Ok(NormList { values, mean })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn n(&self) -> f64 {
        self.values.len() as f64
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.values.len() {
            return Err(Error::domain(format!(
                "member index {i} out of range for {} members",
                self.values.len()
            )));
        }
        Ok(())
    }
}

/// How the Atkinson index is evaluated at `ε = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AtkinsonUnitForm {
    /// `1 − g(ℓ)/ℓ̄` with `g` the geometric mean; the continuous limit.
    #[default]
    GeometricMean,
    /// `1 − ((1/N)·Πℓᵢ)^{1/N} / ℓ̄`, the alternate printed form.
    ScaledProduct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegularizerKind {
    Atkinson {
        epsilon: f64,
        #[serde(default)]
        unit_form: AtkinsonUnitForm,
    },
    Gini,
    Theil,
    VarianceOfLogarithms,
    MeanVector,
}

impl RegularizerKind {
    pub fn atkinson(epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(RegularizerKind::Atkinson {
            epsilon,
            unit_form: AtkinsonUnitForm::GeometricMean,
        })
    }

    /// Short label used in configs and result tables.
    pub fn label(&self) -> &'static str {
        match self {
            RegularizerKind::Atkinson { .. } => "atkinson",
            RegularizerKind::Gini => "gini",
            RegularizerKind::Theil => "theil",
            RegularizerKind::VarianceOfLogarithms => "vol",
            RegularizerKind::MeanVector => "meanvector",
        }
    }

    /// `I(ℓᵢ, ℓ)`. Only MeanVector depends on `i`; the index is validated
    /// for every kind.
    pub fn value(&self, norms: &NormList, i: usize) -> Result<f64> {
        norms.check_index(i)?;
        match *self {
            RegularizerKind::Atkinson { epsilon, unit_form } => {
                atkinson_with(norms, epsilon, unit_form)
            }
            RegularizerKind::Gini => Ok(gini(norms)),
            RegularizerKind::Theil => Ok(theil(norms)),
            RegularizerKind::VarianceOfLogarithms => Ok(variance_of_logarithms(norms)),
            RegularizerKind::MeanVector => mean_vector(norms, i),
        }
    }

    /// `∂I/∂ℓᵢ` with `ℓⱼ, j ≠ i` held fixed.
    pub fn grad(&self, norms: &NormList, i: usize) -> Result<f64> {
        norms.check_index(i)?;
        let l = norms.values();
        let n = norms.n();
        let m = norms.mean();
        let li = l[i];
        let g = match *self {
            RegularizerKind::Atkinson { epsilon, unit_form } => {
                check_epsilon(epsilon)?;
                let (p, dp) = if epsilon == 1.0 {
                    let p = unit_power_mean(norms, unit_form);
                    (p, p / (n * li))
                } else {
                    let q = 1.0 - epsilon;
                    let p = power_mean(norms, q);
                    let mq = l.iter().map(|v| v.powf(q)).sum::<f64>() / n;
                    (p, p * li.powf(q) / (mq * n * li))
                };
                (p / n - m * dp) / (m * m)
            }
            RegularizerKind::Gini => {
                let balance: f64 = l
                    .iter()
                    .map(|&lj| match li.partial_cmp(&lj) {
                        Some(Ordering::Greater) => 1.0,
                        Some(Ordering::Less) => -1.0,
                        _ => 0.0,
                    })
                    .sum();
                balance / (n * n * m) - gini(norms) / (n * m)
            }
            RegularizerKind::Theil => {
                let total: f64 = l.iter().sum();
                let entropy_sum: f64 = l.iter().map(|v| v * v.ln()).sum();
                (li.ln() - entropy_sum / total) / total
            }
            RegularizerKind::VarianceOfLogarithms => {
                let log_mean = l.iter().map(|v| v.ln()).sum::<f64>() / n;
                2.0 * (li.ln() - log_mean) / (n * li)
            }
            RegularizerKind::MeanVector => 2.0 * (m - li) * (1.0 / n - 1.0),
        };
        if !g.is_finite() {
            return Err(Error::NonFinite("regularizer gradient"));
        }
        Ok(g)
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::domain(format!(
            "Atkinson inequality aversion must be a finite value ≥ 0, got {epsilon}"
        )));
    }
    Ok(())
}

/// `((1/N)·Σℓᵢ^q)^{1/q}` for `q ≠ 0`, evaluated through `expm1`/`ln_1p` so
/// it stays accurate as `q → 0`.
fn power_mean(norms: &NormList, q: f64) -> f64 {
    let l = norms.values();
    let avg_expm1 = l.iter().map(|v| (q * v.ln()).exp_m1()).sum::<f64>() / norms.n();
    (avg_expm1.ln_1p() / q).exp()
}

fn unit_power_mean(norms: &NormList, form: AtkinsonUnitForm) -> f64 {
    let l = norms.values();
    let n = norms.n();
    let log_mean = l.iter().map(|v| v.ln()).sum::<f64>() / n;
    match form {
        AtkinsonUnitForm::GeometricMean => log_mean.exp(),
        AtkinsonUnitForm::ScaledProduct => (log_mean - n.ln() / n).exp(),
    }
}

/// Atkinson index with inequality aversion `epsilon`, using the
/// geometric-mean form at `epsilon = 1`.
pub fn atkinson(norms: &NormList, epsilon: f64) -> Result<f64> {
    atkinson_with(norms, epsilon, AtkinsonUnitForm::GeometricMean)
}

pub fn atkinson_with(norms: &NormList, epsilon: f64, unit_form: AtkinsonUnitForm) -> Result<f64> {
    check_epsilon(epsilon)?;
    let p = if epsilon == 1.0 {
        unit_power_mean(norms, unit_form)
    } else {
        power_mean(norms, 1.0 - epsilon)
    };
    let a = 1.0 - p / norms.mean();
    Ok(match unit_form {
        AtkinsonUnitForm::GeometricMean => a.max(0.0),
        AtkinsonUnitForm::ScaledProduct => a,
    })
}

/// Gini coefficient from the sorted values:
/// `Σₖ (2k − N − 1)·ℓ₍ₖ₎ / (N²·ℓ̄)` with `k` the 1-based rank.
pub fn gini(norms: &NormList) -> f64 {
    let mut sorted = norms.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = norms.n();
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(k, v)| (2.0 * (k as f64 + 1.0) - n - 1.0) * v)
        .sum();
    (weighted / (n * n * norms.mean())).max(0.0)
}

/// Theil T index, `Σℓ ln ℓ / Σℓ − ln ℓ̄`.
pub fn theil(norms: &NormList) -> f64 {
    let l = norms.values();
    let total: f64 = l.iter().sum();
    let entropy_sum: f64 = l.iter().map(|v| v * v.ln()).sum();
    (entropy_sum / total - norms.mean().ln()).max(0.0)
}

/// Population variance of `ln ℓᵢ`.
pub fn variance_of_logarithms(norms: &NormList) -> f64 {
    let logs: Vec<f64> = norms.values().iter().map(|v| v.ln()).collect();
    let mu = logs.iter().sum::<f64>() / norms.n();
    logs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / norms.n()
}

/// `(ℓ̄ − ℓᵢ)²` for member `i` (0-based).
pub fn mean_vector(norms: &NormList, i: usize) -> Result<f64> {
    norms.check_index(i)?;
    let d = norms.mean() - norms.values()[i];
    Ok(d * d)
}
