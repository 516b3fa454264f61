//! Two differently shaped MLPs fit the same sine wave; CKA heatmaps before
//! and after training show whether they converge to similar
//! representations.

use qdiv_core::autodiff::{Adam, AdamConfig, Optimizer, Tape, Tensor};
use qdiv_core::env::sine_dataset;
use qdiv_core::nn::{Mlp, SeedPolicy};
use qdiv_core::rng::{self, tag};
use qdiv_core::similarity::{heatmap, SimilarityHeatmap};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    pub hidden: Vec<usize>,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SineDemoConfig {
    pub a: NetSpec,
    pub b: NetSpec,
    pub train_points: usize,
    pub probe_points: usize,
    pub steps: usize,
    pub data_seed: u64,
}

impl SineDemoConfig {
    pub fn new(seed_a: u64, seed_b: u64) -> Self {
        SineDemoConfig {
            a: NetSpec {
                hidden: vec![64, 64],
                batch_size: 512,
                learning_rate: 1e-4,
                seed: seed_a,
            },
            b: NetSpec {
                hidden: vec![32, 32],
                batch_size: 128,
                learning_rate: 1e-3,
                seed: seed_b,
            },
            train_points: 2048,
            probe_points: 256,
            steps: 8_000,
            data_seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SineDemoResult {
    pub pre: SimilarityHeatmap,
    pub post: SimilarityHeatmap,
    pub pre_output_cka: Option<f64>,
    pub post_output_cka: Option<f64>,
    /// Mean squared error on the probe grid after training.
    pub mse_a: f64,
    pub mse_b: f64,
}

/// Evenly spaced inputs over one training range, with their sine targets.
pub fn probe_grid(n: usize) -> (Tensor, Tensor) {
    let lo = -2.0 * std::f64::consts::PI;
    let step = 4.0 * std::f64::consts::PI / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
    let ys = xs.iter().map(|x| x.sin()).collect();
    (Tensor::new(vec![n, 1], xs).unwrap(), Tensor::new(vec![n, 1], ys).unwrap())
}

pub fn mse(net: &Mlp, x: &Tensor, y: &Tensor) -> Result<f64> {
    let pred = net.forward(x)?;
    Ok(pred.data().iter().zip(y.data()).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / y.len() as f64)
}

fn build(spec: &NetSpec) -> Result<Mlp> {
    let seeds = SeedPolicy::Independent.layer_seeds(spec.seed, 0, spec.hidden.len() + 1);
    Ok(Mlp::new(1, &spec.hidden, 1, &seeds)?)
}

/// Minibatch Adam on mean squared error.
pub fn fit(spec: &NetSpec, x: &Tensor, y: &Tensor, steps: usize) -> Result<Mlp> {
    let mut net = build(spec)?;
    let mut opt = Adam::new(AdamConfig {
        lr: spec.learning_rate,
        ..AdamConfig::default()
    });
    let mut r = rng::stream(spec.seed, &[tag::DATA]);
    let n = x.len();
    let mut bx = vec![0.0; spec.batch_size];
    let mut by = vec![0.0; spec.batch_size];
    for _ in 0..steps {
        for k in 0..spec.batch_size {
            let i = r.random_range(0..n);
            bx[k] = x.data()[i];
            by[k] = y.data()[i];
        }
        let mut tape = Tape::new();
        let xv = tape.constant(Tensor::new(vec![spec.batch_size, 1], bx.clone())?);
        let fwd = net.forward_tape(&mut tape, xv)?;
        let yv = tape.constant(Tensor::new(vec![spec.batch_size, 1], by.clone())?);
        let d = tape.sub(fwd.output, yv)?;
        let sq = tape.square(d)?;
        let loss = tape.mean(sq)?;
        let g = tape.backward(loss)?;
        let grads: Vec<Vec<f64>> = fwd
            .params
            .iter()
            .zip(net.params())
            .map(|(&v, p)| g.get_or_zeros(v, p.len()))
            .collect();
        opt.step(&mut net.params_mut(), &grads)?;
    }
    Ok(net)
}

pub fn sine_demo(cfg: &SineDemoConfig) -> Result<SineDemoResult> {
    let (x, y) = sine_dataset(cfg.train_points, cfg.data_seed)?;
    let (probe, truth) = probe_grid(cfg.probe_points);
    let pre = heatmap(&build(&cfg.a)?, &build(&cfg.b)?, &probe)?;
    let (net_a, net_b) = rayon::join(|| fit(&cfg.a, &x, &y, cfg.steps), || fit(&cfg.b, &x, &y, cfg.steps));
    let (net_a, net_b) = (net_a?, net_b?);
    let post = heatmap(&net_a, &net_b, &probe)?;
    Ok(SineDemoResult {
        pre_output_cka: pre.get("out", "out"),
        post_output_cka: post.get("out", "out"),
        pre,
        post,
        mse_a: mse(&net_a, &probe, &truth)?,
        mse_b: mse(&net_b, &probe, &truth)?,
    })
}
