//! Fully connected ReLU networks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{kernels, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::rng;

/// How layer seeds are assigned across ensemble members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SeedPolicy {
    /// Every member and layer draws from its own stream.
    #[default]
    Independent,
    /// Layer `k` of every member shares one seed, so members start identical.
    IdenticalLayers,
}

impl SeedPolicy {
    /// Seeds for each of `layers` layers of ensemble member `member`.
    pub fn layer_seeds(self, base: u64, member: usize, layers: usize) -> Vec<u64> {
        (0..layers)
            .map(|layer| match self {
                SeedPolicy::Independent => {
                    rng::derive_seed(base, &[rng::tag::INIT, member as u64, layer as u64])
                }
                SeedPolicy::IdenticalLayers => {
                    rng::derive_seed(base, &[rng::tag::INIT, u64::MAX, layer as u64])
                }
            })
            .collect()
    }
}

/// One affine layer `y = x·W + b` with `W` stored `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Linear {
    /// Uniform fan-in initialization, `U(-1/√fan_in, 1/√fan_in)` for both
    /// weights and bias, drawn from a stream owned by this layer.
    pub fn new(fan_in: usize, fan_out: usize, seed: u64) -> Self {
        let mut rng = rng::stream(seed, &[]);
        let bound = 1.0 / (fan_in as f64).sqrt();
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.random_range(-bound..bound)).collect()
        };
        let w = draw(fan_in * fan_out);
        let b = draw(fan_out);
        Linear {
            weight: Tensor::new(vec![fan_in, fan_out], w).expect("consistent shape"),
            bias: Tensor::vector(b),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn fan_out(&self) -> usize {
        self.weight.shape()[1]
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (m, k) = x.dims2()?;
        if k != self.fan_in() {
            return Err(Error::Shape(format!(
                "layer expects {} inputs, got {k}",
                self.fan_in()
            )));
        }
        let n = self.fan_out();
        let mut out = kernels::matmul(x.data(), self.weight.data(), m, k, n);
        kernels::add_row_bias(&mut out, self.bias.data());
        Tensor::new(vec![m, n], out)
    }
}

/// Multilayer perceptron with ReLU between layers and a linear head.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Linear>,
}

/// Q-functions are plain MLPs whose output width is the action count.
pub type QNetwork = Mlp;

/// Tape handles for one forward pass.
#[derive(Debug, Clone)]
pub struct TapeForward {
    /// `[w1, b1, w2, b2, …]`, aligned with [`Mlp::params`].
    pub params: Vec<Var>,
    pub output: Var,
}

impl Mlp {
    pub fn new(input: usize, hidden: &[usize], output: usize, layer_seeds: &[u64]) -> Result<Self> {
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(input);
        widths.extend_from_slice(hidden);
        widths.push(output);
        if widths.contains(&0) {
            return Err(Error::Config(format!("layer widths must be positive: {widths:?}")));
        }
        if layer_seeds.len() != widths.len() - 1 {
            return Err(Error::Config(format!(
                "{} layer seeds for {} layers",
                layer_seeds.len(),
                widths.len() - 1
            )));
        }
        let layers = widths
            .windows(2)
            .zip(layer_seeds)
            .map(|(w, &seed)| Linear::new(w[0], w[1], seed))
            .collect();
        Ok(Mlp { layers })
    }

    pub fn from_layers(layers: Vec<Linear>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("an MLP needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].fan_out() != pair[1].fan_in() {
                return Err(Error::Shape(format!(
                    "layer widths do not chain: {} → {}",
                    pair[0].fan_out(),
                    pair[1].fan_in()
                )));
            }
        }
        Ok(Mlp { layers })
    }

    pub fn layers(&self) -> &[Linear] {
        &self.layers
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_len(&self) -> usize {
        self.layers.last().map(Linear::fan_out).unwrap_or(0)
    }

    pub fn params(&self) -> Vec<&Tensor> {
        self.layers
            .iter()
            .flat_map(|l| [&l.weight, &l.bias])
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weight, &mut l.bias])
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Σ w² over all weights and biases.
    pub fn squared_norm(&self) -> f64 {
        self.params().iter().map(|p| p.squared_norm()).sum()
    }

    /// Inference without recording; `x` is `batch × input`.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mut h = self.layers[0].forward(x)?;
        for layer in &self.layers[1..] {
            let act = Tensor::new(h.shape().to_vec(), kernels::relu(h.data()))?;
            h = layer.forward(&act)?;
        }
        h.ensure_finite("network forward")?;
        Ok(h)
    }

    /// Output for a single observation.
    pub fn forward_one(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let x = Tensor::new(vec![1, obs.len()], obs.to_vec())?;
        Ok(self.forward(&x)?.into_data())
    }

    /// Every intermediate activation in forward order: for each hidden layer
    /// the pre-ReLU then post-ReLU matrix, followed by the output.
    pub fn activations(&self, x: &Tensor) -> Result<Vec<(String, Tensor)>> {
        let mut out = Vec::with_capacity(2 * self.layers.len() - 1);
        let mut h = x.clone();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let pre = layer.forward(&h)?;
            if i == last {
                out.push(("out".to_string(), pre));
                break;
            }
            let post = Tensor::new(pre.shape().to_vec(), kernels::relu(pre.data()))?;
            out.push((format!("pre{}", i + 1), pre));
            out.push((format!("post{}", i + 1), post.clone()));
            h = post;
        }
        Ok(out)
    }

    /// Records a forward pass on `tape` with the parameters as leaves.
    pub fn forward_tape(&self, tape: &mut Tape, x: Var) -> Result<TapeForward> {
        let params: Vec<Var> = self.params().into_iter().map(|p| tape.param(p)).collect();
        let mut h = x;
        for (i, pair) in params.chunks_exact(2).enumerate() {
            if i > 0 {
                h = tape.relu(h)?;
            }
            let z = tape.matmul(h, pair[0])?;
            h = tape.add_row_bias(z, pair[1])?;
        }
        Ok(TapeForward { params, output: h })
    }

    /// Overwrites parameters with `other`'s. Layouts must match.
    pub fn copy_from(&mut self, other: &Mlp) -> Result<()> {
        if self.layers.len() != other.layers.len()
            || self
                .layers
                .iter()
                .zip(&other.layers)
                .any(|(a, b)| a.weight.shape() != b.weight.shape())
        {
            return Err(Error::Shape("copy between differently shaped networks".into()));
        }
        self.layers.clone_from(&other.layers);
        Ok(())
    }
}
