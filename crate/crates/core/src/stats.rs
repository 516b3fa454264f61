//! Evaluation statistics: pooled z-scores, Welch's t-test and a sign test.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub method: String,
    pub seed: u64,
    pub value: f64,
}

/// Per-seed scores of several methods, pooled into one population.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScorePopulation {
    samples: Vec<Sample>,
}

impl ScorePopulation {
    pub fn new() -> Self {
        ScorePopulation::default()
    }

    pub fn push(&mut self, method: impl Into<String>, seed: u64, value: f64) {
        self.samples.push(Sample {
            method: method.into(),
            seed,
            value,
        });
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// Method labels in first-seen order.
    pub fn methods(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in &self.samples {
            if !out.contains(&s.method) {
                out.push(s.method.clone());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZScores {
    /// Aligned with [`ScorePopulation::samples`].
    pub per_sample: Vec<f64>,
    /// `(method, mean z)` in first-seen order.
    pub per_method: Vec<(String, f64)>,
}

impl ZScores {
    pub fn method(&self, name: &str) -> Option<f64> {
        self.per_method.iter().find(|(m, _)| m == name).map(|(_, z)| *z)
    }

    /// Sample z-scores belonging to `method`, in population order.
    pub fn samples_of<'a>(&'a self, pop: &'a ScorePopulation, method: &'a str) -> impl Iterator<Item = f64> + 'a {
        pop.samples()
            .iter()
            .zip(&self.per_sample)
            .filter(move |(s, _)| s.method == method)
            .map(|(_, z)| *z)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Variance with denominator `n − ddof`.
pub fn variance(xs: &[f64], ddof: usize) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - ddof) as f64
}

/// Standard scores against the pooled population mean and population
/// standard deviation, then averaged per method.
pub fn z_scores(pop: &ScorePopulation) -> Result<ZScores> {
    let values: Vec<f64> = pop.samples.iter().map(|s| s.value).collect();
    if values.len() < 2 {
        return Err(Error::DegeneratePopulation(format!(
            "need at least 2 samples, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("score population"));
    }
    let mu = mean(&values);
    let sigma = variance(&values, 0).sqrt();
    if !(sigma > 0.0) {
        return Err(Error::DegeneratePopulation("all samples are equal".into()));
    }
    let per_sample: Vec<f64> = values.iter().map(|v| (v - mu) / sigma).collect();
    let per_method = pop
        .methods()
        .into_iter()
        .map(|m| {
            let zs: Vec<f64> = pop
                .samples
                .iter()
                .zip(&per_sample)
                .filter(|(s, _)| s.method == m)
                .map(|(_, z)| *z)
                .collect();
            let z = mean(&zs);
            (m, z)
        })
        .collect();
    Ok(ZScores {
        per_sample,
        per_method,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult {
    pub t: f64,
    /// Welch–Satterthwaite degrees of freedom.
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
}

/// Welch's unequal-variance two-sample t-test.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Domain(format!(
            "Welch's test needs ≥ 2 samples per group, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("t-test samples"));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let va = variance(a, 1) / na;
    let vb = variance(b, 1) / nb;
    let diff = mean(a) - mean(b);
    let se2 = va + vb;
    if se2 == 0.0 {
        // Both groups constant: identical means are indistinguishable,
        // different means are separated with certainty.
        let df = na + nb - 2.0;
        return Ok(if diff == 0.0 {
            TTestResult { t: 0.0, df, p: 1.0 }
        } else {
            TTestResult {
                t: diff.signum() * f64::INFINITY,
                df,
                p: 0.0,
            }
        });
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    let p = (2.0 * student_t_cdf(-t.abs(), df)).min(1.0);
    Ok(TTestResult { t, df, p })
}

/// CDF of Student's t with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 0.5;
    }
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let x = df / (df + t * t);
    let tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x);
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // The continued fraction converges fast for x < (a+1)/(a+b+2).
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// One-sided sign test: `P(X ≥ successes)` for `X ~ Binomial(trials, ½)`.
pub fn sign_test(successes: usize, trials: usize) -> f64 {
    if trials == 0 {
        return 1.0;
    }
    let n = trials as f64;
    let ln_half_n = n * 0.5f64.ln();
    (successes.min(trials)..=trials)
        .map(|k| {
            let k = k as f64;
            (ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0) + ln_half_n).exp()
        })
        .sum::<f64>()
        .min(1.0)
}
