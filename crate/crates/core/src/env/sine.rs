use std::f64::consts::PI;

use rand::Rng;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::rng;

/// `n` points with `x ~ U[-2π, 2π]` and targets `sin(x)`, both `n × 1`.
pub fn sine_dataset(n: usize, seed: u64) -> Result<(Tensor, Tensor)> {
    if n < 2 {
        return Err(Error::Domain(format!("sine dataset needs n ≥ 2, got {n}")));
    }
    let mut rng = rng::stream(seed, &[rng::tag::DATA]);
    let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0 * PI..=2.0 * PI)).collect();
    let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
    Ok((Tensor::new(vec![n, 1], xs)?, Tensor::new(vec![n, 1], ys)?))
}
