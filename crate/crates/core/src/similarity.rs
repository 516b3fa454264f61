//! HSIC and linear-kernel CKA between activation matrices.

use crate::autodiff::{kernels, Tensor};
use crate::error::{Error, Result};
use crate::nn::Mlp;

/// Denominators below this make CKA undefined.
pub const DEGENERATE_TOL: f64 = 1e-12;

/// `n × p` activations of one layer over a probe batch.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMatrix {
    pub values: Tensor,
    pub layer: String,
    pub network: String,
}

impl ActivationMatrix {
    pub fn new(values: Tensor, layer: impl Into<String>, network: impl Into<String>) -> Result<Self> {
        let (n, _) = values.dims2()?;
        if n < 2 {
            return Err(Error::Domain(format!("activation matrix needs n ≥ 2 rows, got {n}")));
        }
        if values.data().iter().any(|v| v.is_nan()) {
            return Err(Error::NonFinite("activation matrix"));
        }
        Ok(ActivationMatrix {
            values,
            layer: layer.into(),
            network: network.into(),
        })
    }

    pub fn rows(&self) -> usize {
        self.values.shape()[0]
    }
}

/// `K = X·Xᵀ`.
pub fn linear_gram(x: &Tensor) -> Result<Tensor> {
    let (n, p) = x.dims2()?;
    let mut xt = vec![0.0; p * n];
    for i in 0..n {
        for j in 0..p {
            xt[j * n + i] = x.data()[i * p + j];
        }
    }
    Tensor::new(vec![n, n], kernels::matmul(x.data(), &xt, n, p, n))
}

/// `H·K·H` with `H = I − (1/n)·11ᵀ`, via row and column mean removal.
pub fn center_gram(k: &Tensor) -> Result<Tensor> {
    let (n, m) = k.dims2()?;
    if n != m {
        return Err(Error::Shape(format!("Gram matrix must be square, got {n}×{m}")));
    }
    let d = k.data();
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| d[i * n..(i + 1) * n].iter().sum::<f64>() / nf).collect();
    let col_means: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|i| d[i * n + j]).sum::<f64>() / nf)
        .collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = d[i * n + j] - row_means[i] - col_means[j] + grand;
        }
    }
    Tensor::new(vec![n, n], out)
}

fn frobenius_dot(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

/// Empirical HSIC, `tr(K·H·L·H) / (n − 1)²`.
///
/// Uses `tr(KHLH) = ⟨HKH, L⟩_F`, which holds for symmetric `L`.
pub fn hsic(k: &Tensor, l: &Tensor) -> Result<f64> {
    let (n, n2) = k.dims2()?;
    if k.shape() != l.shape() || n != n2 {
        return Err(Error::Shape(format!(
            "HSIC needs equal square Gram matrices, got {:?} and {:?}",
            k.shape(),
            l.shape()
        )));
    }
    if n < 2 {
        return Err(Error::Domain("HSIC needs n ≥ 2".into()));
    }
    let kc = center_gram(k)?;
    Ok(frobenius_dot(&kc, l) / ((n - 1) * (n - 1)) as f64)
}

/// CKA from two centred Gram matrices.
fn cka_centered(kc: &Tensor, lc: &Tensor) -> Result<f64> {
    let kk = frobenius_dot(kc, kc);
    let ll = frobenius_dot(lc, lc);
    let denom = (kk * ll).sqrt();
    let n = kc.shape()[0];
    let scale = ((n - 1) * (n - 1)) as f64;
    if denom / scale < DEGENERATE_TOL {
        return Err(Error::UndefinedSimilarity(
            "an activation matrix is constant across the probe batch".into(),
        ));
    }
    Ok(frobenius_dot(kc, lc) / denom)
}

/// Linear CKA between `n × p₁` and `n × p₂` activations.
pub fn cka(x: &Tensor, y: &Tensor) -> Result<f64> {
    let (n1, _) = x.dims2()?;
    let (n2, _) = y.dims2()?;
    if n1 != n2 {
        return Err(Error::Shape(format!("CKA inputs have {n1} and {n2} rows")));
    }
    if n1 < 2 {
        return Err(Error::Domain("CKA needs n ≥ 2".into()));
    }
    cka_centered(&center_gram(&linear_gram(x)?)?, &center_gram(&linear_gram(y)?)?)
}

/// Pre- and post-ReLU activations of every hidden layer, then the output.
pub fn capture_activations(net: &Mlp, probe: &Tensor, tag: &str) -> Result<Vec<ActivationMatrix>> {
    net.activations(probe)?
        .into_iter()
        .map(|(layer, values)| ActivationMatrix::new(values, layer, tag))
        .collect()
}

/// CKA between every layer of network A (rows) and network B (columns).
/// Cells whose CKA is undefined are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityHeatmap {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl SimilarityHeatmap {
    pub fn transpose(&self) -> SimilarityHeatmap {
        let values = (0..self.col_labels.len())
            .map(|j| self.values.iter().map(|row| row[j]).collect())
            .collect();
        SimilarityHeatmap {
            row_labels: self.col_labels.clone(),
            col_labels: self.row_labels.clone(),
            values,
        }
    }

    /// Cells pairing equally named layers.
    pub fn corresponding(&self) -> Vec<(String, Option<f64>)> {
        self.row_labels
            .iter()
            .enumerate()
            .filter_map(|(i, label)| {
                let j = self.col_labels.iter().position(|c| c == label)?;
                Some((label.clone(), self.values[i][j]))
            })
            .collect()
    }

    /// Mean CKA over corresponding layers, skipping undefined cells.
    pub fn mean_corresponding(&self) -> Option<f64> {
        let vals: Vec<f64> = self.corresponding().into_iter().filter_map(|(_, v)| v).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    pub fn get(&self, row: &str, col: &str) -> Option<f64> {
        let i = self.row_labels.iter().position(|r| r == row)?;
        let j = self.col_labels.iter().position(|c| c == col)?;
        self.values[i][j]
    }

    /// Labeled CSV: header row of column labels, one row per row label,
    /// empty cells for undefined values.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("layer");
        for c in &self.col_labels {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (label, row) in self.row_labels.iter().zip(&self.values) {
            out.push_str(label);
            for v in row {
                out.push(',');
                if let Some(v) = v {
                    out.push_str(&format!("{v:.17e}"));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Shape("empty heatmap CSV".into()))?;
        let col_labels: Vec<String> = header.split(',').skip(1).map(str::to_string).collect();
        let mut row_labels = Vec::new();
        let mut values = Vec::new();
        for (idx, line) in lines.enumerate() {
            let mut cells = line.split(',');
            row_labels.push(cells.next().unwrap_or_default().to_string());
            let row: Vec<Option<f64>> = cells
                .map(|c| {
                    if c.trim().is_empty() {
                        Ok(None)
                    } else {
                        c.trim().parse::<f64>().map(Some).map_err(|e| {
                            Error::Shape(format!("heatmap row {}: bad cell `{c}`: {e}", idx + 2))
                        })
                    }
                })
                .collect::<Result<_>>()?;
            if row.len() != col_labels.len() {
                return Err(Error::Shape(format!(
                    "heatmap row {} has {} cells, expected {}",
                    idx + 2,
                    row.len(),
                    col_labels.len()
                )));
            }
            values.push(row);
        }
        Ok(SimilarityHeatmap {
            row_labels,
            col_labels,
            values,
        })
    }
}

/// Layer-by-layer CKA between two networks on the same probe batch.
pub fn heatmap(net_a: &Mlp, net_b: &Mlp, probe: &Tensor) -> Result<SimilarityHeatmap> {
    let acts_a = capture_activations(net_a, probe, "a")?;
    let acts_b = capture_activations(net_b, probe, "b")?;
    let grams = |acts: &[ActivationMatrix]| -> Result<Vec<Tensor>> {
        acts.iter()
            .map(|a| center_gram(&linear_gram(&a.values)?))
            .collect()
    };
    let ga = grams(&acts_a)?;
    let gb = grams(&acts_b)?;
    let values = ga
        .iter()
        .map(|ka| {
            gb.iter()
                .map(|kb| match cka_centered(ka, kb) {
                    Ok(v) => Ok(Some(v)),
                    Err(Error::UndefinedSimilarity(_)) => Ok(None),
                    Err(e) => Err(e),
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimilarityHeatmap {
        row_labels: acts_a.into_iter().map(|a| a.layer).collect(),
        col_labels: acts_b.into_iter().map(|a| a.layer).collect(),
        values,
    })
}
