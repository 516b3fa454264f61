//! Direct transcriptions of the inequality measures, kept free of the
//! numerical rearrangements used in the library.

pub fn mean(l: &[f64]) -> f64 {
    l.iter().sum::<f64>() / l.len() as f64
}

pub fn atkinson(l: &[f64], eps: f64) -> f64 {
    let n = l.len() as f64;
    if eps == 1.0 {
        let g = l.iter().map(|x| x.ln()).sum::<f64>() / n;
        1.0 - g.exp() / mean(l)
    } else {
        let s = l.iter().map(|x| x.powf(1.0 - eps)).sum::<f64>() / n;
        1.0 - s.powf(1.0 / (1.0 - eps)) / mean(l)
    }
}

pub fn gini(l: &[f64]) -> f64 {
    let n = l.len() as f64;
    let mut s = 0.0;
    for a in l {
        for b in l {
            s += (a - b).abs();
        }
    }
    s / (2.0 * n * n * mean(l))
}

pub fn theil(l: &[f64]) -> f64 {
    let m = mean(l);
    l.iter().map(|x| x / m * (x / m).ln()).sum::<f64>() / l.len() as f64
}

pub fn vol(l: &[f64]) -> f64 {
    let n = l.len() as f64;
    let ln_g = l.iter().map(|x| x.ln()).sum::<f64>() / n;
    l.iter().map(|x| (x.ln() - ln_g).powi(2)).sum::<f64>() / n
}

pub fn mean_vector(l: &[f64], i: usize) -> f64 {
    (mean(l) - l[i]).powi(2)
}

/// Richardson-extrapolated central difference of `f` in coordinate `i`.
pub fn partial(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let central = |h: f64| {
        let mut hi = x.to_vec();
        let mut lo = x.to_vec();
        hi[i] += h;
        lo[i] -= h;
        (f(&hi) - f(&lo)) / (2.0 * h)
    };
    (4.0 * central(h / 2.0) - central(h)) / 3.0
}
