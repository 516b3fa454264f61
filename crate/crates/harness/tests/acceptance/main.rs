//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Long-running criteria keep their run directories under
//! `$CARGO_TARGET_TMPDIR/acceptance` for inspection.

mod oracle;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use qdiv_core::agents::{Agent, AgentConfig, Algorithm, RegularizerChoice};
use qdiv_core::autodiff::Tensor;
use qdiv_core::env::{CatcherConfig, ChainConfig, EnvConfig, MaxbiasChain};
use qdiv_core::nn::SeedPolicy;
use qdiv_core::regularizers::{self as reg, NormList, RegularizerKind};
use qdiv_core::replay::{Batch, Transition};
use qdiv_core::rng::{self, tag};
use qdiv_core::similarity::{center_gram, cka, hsic, linear_gram};
use qdiv_core::stats::{self, ScorePopulation};
use qdiv_harness::matrix::{run_cells, Cell, RunManifest};
use qdiv_harness::sine_demo::{sine_demo, SineDemoConfig};
use qdiv_harness::tables;
use qdiv_harness::{ExperimentConfig, ExperimentSection};
use rand::Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

type Outcome = Result<Verdict, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn artifacts(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name)
}

// ---------------------------------------------------------------- criterion 1

fn c1_regularizer_oracles() -> Outcome {
    let tol = 1e-10;
    let nl = |v: &[f64]| NormList::new(v.to_vec()).map_err(err);
    let s3 = 3f64.sqrt();
    let l13 = nl(&[1.0, 3.0])?;
    let hand = [
        ("atkinson(0.5)", reg::atkinson(&l13, 0.5).map_err(err)?, 1.0 - 0.5 * ((1.0 + s3) / 2.0).powi(2)),
        ("atkinson(1)", reg::atkinson(&l13, 1.0).map_err(err)?, 1.0 - s3 / 2.0),
        ("gini[1,3]", reg::gini(&l13), 0.25),
        ("gini[1,1,4]", reg::gini(&nl(&[1.0, 1.0, 4.0])?), 1.0 / 3.0),
        ("theil", reg::theil(&l13), 0.5 * (0.5 * 0.5f64.ln() + 1.5 * 1.5f64.ln())),
        ("vol", reg::variance_of_logarithms(&l13), s3.ln().powi(2)),
        ("mean_vector i=1", reg::mean_vector(&l13, 0).map_err(err)?, 1.0),
        ("mean_vector i=2", reg::mean_vector(&l13, 1).map_err(err)?, 1.0),
    ];
    for (name, got, want) in hand {
        if (got - want).abs() > tol {
            return Ok(verdict(false, format!("{name}: {got} vs hand value {want}")));
        }
    }
    let equal = nl(&[2.5; 4])?;
    let zeros = [
        reg::atkinson(&equal, 0.5).map_err(err)?,
        reg::gini(&equal),
        reg::theil(&equal),
        reg::variance_of_logarithms(&equal),
        reg::mean_vector(&equal, 2).map_err(err)?,
    ];
    if zeros.iter().any(|z| z.abs() > tol) {
        return Ok(verdict(false, format!("equal norms not zero: {zeros:?}")));
    }

    let mut r = rng::stream(2024, &[tag::DATA]);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = r.random_range(2..=8);
        let scale = 10f64.powf(r.random_range(-2.0..3.0));
        let l: Vec<f64> = (0..n).map(|_| scale * r.random_range(0.05..5.0)).collect();
        let list = nl(&l)?;
        let i = r.random_range(0..n);
        let pairs = [
            (reg::atkinson(&list, 0.5).map_err(err)?, oracle::atkinson(&l, 0.5)),
            (reg::atkinson(&list, 1.0).map_err(err)?, oracle::atkinson(&l, 1.0)),
            (reg::atkinson(&list, 2.0).map_err(err)?, oracle::atkinson(&l, 2.0)),
            (reg::gini(&list), oracle::gini(&l)),
            (reg::theil(&list), oracle::theil(&l)),
            (reg::variance_of_logarithms(&list), oracle::vol(&l)),
            (reg::mean_vector(&list, i).map_err(err)?, oracle::mean_vector(&l, i)),
        ];
        for (got, want) in pairs {
            worst = worst.max((got - want).abs());
        }
    }
    Ok(verdict(
        worst <= tol,
        format!("8 hand examples, 1000 random lists; max |diff| {worst:.2e} (tol {tol:.0e})"),
    ))
}

// ---------------------------------------------------------------- criterion 2

fn kinds() -> Vec<RegularizerKind> {
    vec![
        RegularizerKind::atkinson(0.5).unwrap(),
        RegularizerKind::atkinson(1.0).unwrap(),
        RegularizerKind::atkinson(2.0).unwrap(),
        RegularizerKind::Gini,
        RegularizerKind::Theil,
        RegularizerKind::VarianceOfLogarithms,
        RegularizerKind::MeanVector,
    ]
}

fn random_batch(seed: u64, obs: usize, actions: usize, n: usize) -> Result<Batch, String> {
    let mut r = rng::stream(seed, &[tag::DATA]);
    let ts: Vec<Transition> = (0..n)
        .map(|_| Transition {
            s: (0..obs).map(|_| r.random_range(-1.0..1.0)).collect(),
            a: r.random_range(0..actions),
            r: r.random_range(-1.0..1.0),
            s_next: (0..obs).map(|_| r.random_range(-1.0..1.0)).collect(),
            done: r.random_bool(0.2),
        })
        .collect();
    Batch::from_transitions(&ts.iter().collect::<Vec<_>>()).map_err(err)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

fn c2_gradients() -> Outcome {
    let tol = 1e-5;
    let mut worst_reg = 0.0f64;
    let mut r = rng::stream(7, &[tag::DATA]);
    let mut lists = 0;
    while lists < 200 {
        let n = r.random_range(2..=6);
        let l: Vec<f64> = (0..n).map(|_| r.random_range(0.1..10.0)).collect();
        let gap = |i: usize| {
            l.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, v)| (v - l[i]).abs())
                .fold(f64::INFINITY, f64::min)
        };
        if (0..n).any(|i| gap(i) < 1e-3) {
            continue;
        }
        lists += 1;
        let list = NormList::new(l.clone()).map_err(err)?;
        for kind in kinds() {
            for i in 0..n {
                let f = |x: &[f64]| kind.value(&NormList::new(x.to_vec()).unwrap(), i).unwrap();
                let h = (1e-3 * l[i]).min(0.25 * gap(i));
                let num = oracle::partial(f, &l, i, h);
                let got = kind.grad(&list, i).map_err(err)?;
                let e = rel_err(got, num);
                if e > worst_reg {
                    worst_reg = e;
                }
            }
        }
    }

    let mut worst_loss = 0.0f64;
    for (alg, n) in [(Algorithm::Maxmin, 2), (Algorithm::Ensemble, 2), (Algorithm::Maxmin, 3)] {
        let b = random_batch(4 + n as u64, 1, 2, 12)?;
        for choice in RegularizerChoice::ALL {
            for eps in [0.5, 1.0, 2.0] {
                if choice != RegularizerChoice::Atkinson && eps != 0.5 {
                    continue;
                }
                let cfg = AgentConfig {
                    algorithm: alg,
                    ensemble_size: n,
                    hidden: vec![],
                    regularizer: choice,
                    atkinson_epsilon: eps,
                    lambda: 0.7,
                    batch_size: 8,
                    buffer_capacity: 100,
                    ..AgentConfig::default()
                };
                let agent = Agent::new(cfg, 1, 2, 13).map_err(err)?;
                for member in 0..n {
                    let (_, grads) = agent.loss_and_grads(member, &b).map_err(err)?;
                    let flat = grads.concat();
                    let loss_at = |k: usize, delta: f64| -> Result<f64, String> {
                        let mut a = agent.clone();
                        let mut k = k;
                        for p in a.members_mut()[member].online.params_mut() {
                            if k < p.len() {
                                p.data_mut()[k] += delta;
                                break;
                            }
                            k -= p.len();
                        }
                        Ok(a.loss_and_grads(member, &b).map_err(err)?.0.loss)
                    };
                    for (k, g) in flat.iter().enumerate() {
                        let h = 1e-5;
                        let num = (loss_at(k, h)? - loss_at(k, -h)?) / (2.0 * h);
                        worst_loss = worst_loss.max(rel_err(*g, num));
                    }
                }
            }
        }
    }
    Ok(verdict(
        worst_reg < tol && worst_loss < tol,
        format!(
            "regularizer partials max rel {worst_reg:.1e} over {lists} lists; \
             regularized loss max rel {worst_loss:.1e} (tol {tol:.0e})"
        ),
    ))
}

// ---------------------------------------------------------------- criterion 3

fn catcher() -> EnvConfig {
    EnvConfig::CatcherLite(CatcherConfig::default())
}

fn trajectory(cfg: AgentConfig, seed: u64, steps: u64) -> Result<Vec<u64>, String> {
    let env_cfg = catcher();
    let mut env = env_cfg.build(rng::derive_seed(seed, &[tag::ENV])).map_err(err)?;
    let mut eval = env_cfg.build(rng::derive_seed(seed, &[tag::EVAL_ENV])).map_err(err)?;
    let mut agent = Agent::new(cfg, env.observation_len(), env.num_actions(), seed).map_err(err)?;
    let mut trace = Vec::with_capacity(steps as usize);
    agent
        .train_with_hook(env.as_mut(), eval.as_mut(), steps, steps, |a, _| {
            let mut h = DefaultHasher::new();
            for m in a.members() {
                for p in m.online.params().into_iter().chain(m.target.params()) {
                    for v in p.data() {
                        v.to_bits().hash(&mut h);
                    }
                }
            }
            trace.push(h.finish());
            Ok(())
        })
        .map_err(err)?;
    Ok(trace)
}

fn c3_zero_lambda() -> Outcome {
    let steps = 10_000;
    let seed = 17;
    let mut compared = 0;
    for alg in [Algorithm::Maxmin, Algorithm::Ensemble] {
        let base = AgentConfig {
            algorithm: alg,
            ensemble_size: 2,
            hidden: vec![32, 32],
            learning_rate: 1e-3,
            eval_episodes: 1,
            ..AgentConfig::default()
        };
        let reference = trajectory(base.clone(), seed, steps)?;
        for choice in RegularizerChoice::ALL {
            let cfg = AgentConfig {
                regularizer: choice,
                lambda: 0.0,
                ..base.clone()
            };
            let t = trajectory(cfg, seed, steps)?;
            if let Some(k) = (0..reference.len()).find(|&k| reference.get(k) != t.get(k)) {
                return Ok(verdict(
                    false,
                    format!("{} + {} diverges at step {}", alg.label(), choice.label(), k + 1),
                ));
            }
            compared += 1;
        }
    }
    Ok(verdict(
        true,
        format!("{compared} regularized runs bit-identical to their baseline for {steps} steps"),
    ))
}

// ---------------------------------------------------------------- criterion 4

fn chain_estimate(algorithm: Algorithm, n: usize, seed: u64) -> Result<f64, String> {
    let env_cfg = EnvConfig::MaxbiasChain(ChainConfig::default());
    let mut env = env_cfg.build(rng::derive_seed(seed, &[tag::ENV])).map_err(err)?;
    let mut eval = env_cfg.build(rng::derive_seed(seed, &[tag::EVAL_ENV])).map_err(err)?;
    let cfg = AgentConfig {
        algorithm,
        ensemble_size: n,
        hidden: vec![32],
        learning_rate: 1e-3,
        exploration_steps: 100,
        target_sync_period: 50,
        eval_episodes: 1,
        ..AgentConfig::default()
    };
    let mut agent = Agent::new(cfg, env.observation_len(), env.num_actions(), seed).map_err(err)?;
    agent.train(env.as_mut(), eval.as_mut(), 300, 300).map_err(err)?;
    let q = agent.q_values(&MaxbiasChain::start_observation()).map_err(err)?;
    Ok(q[MaxbiasChain::LEFT].max(q[MaxbiasChain::RIGHT]))
}

fn c4_overestimation() -> Outcome {
    let seeds = 100;
    let (mut dqn, mut mm) = (Vec::new(), Vec::new());
    for seed in 0..seeds {
        dqn.push(chain_estimate(Algorithm::Dqn, 1, seed)?);
        mm.push(chain_estimate(Algorithm::Maxmin, 4, seed)?);
    }
    let above = dqn.iter().zip(&mm).filter(|(d, m)| d > m).count();
    let positive = dqn.iter().filter(|&&d| d > 0.0).count();
    let p_order = stats::sign_test(above, seeds as usize);
    let p_positive = stats::sign_test(positive, seeds as usize);
    let (md, mmm) = (stats::mean(&dqn), stats::mean(&mm));
    Ok(verdict(
        p_order < 0.01 && p_positive < 0.01 && mmm < md,
        format!(
            "mean max Q(A): DQN {md:.3}, Maxmin-4 {mmm:.3}; DQN > Maxmin in {above}/{seeds} (p {p_order:.1e}), \
             DQN > 0 in {positive}/{seeds} (p {p_positive:.1e})"
        ),
    ))
}

// ---------------------------------------------------------------- criteria 5, 6, 10

const LAMBDAS: [f64; 4] = [1e-5, 1e-6, 1e-7, 1e-8];
const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

fn catcher_config(name: &str) -> ExperimentConfig {
    ExperimentConfig {
        experiment: ExperimentSection {
            name: name.into(),
            seeds: SEEDS.to_vec(),
            total_steps: 25_000,
            eval_every: 1_000,
            out_dir: artifacts(name),
            algorithms: vec![Algorithm::Maxmin],
            lambdas: LAMBDAS.to_vec(),
            final_window: 5,
            probe_size: 256,
            ..ExperimentSection::default()
        },
        environment: catcher(),
        agent: AgentConfig {
            algorithm: Algorithm::Maxmin,
            ensemble_size: 2,
            hidden: vec![64, 64],
            learning_rate: 1e-4,
            ..AgentConfig::default()
        },
    }
}

fn cells(regularizer: RegularizerChoice, lambdas: &[f64]) -> Vec<Cell> {
    lambdas
        .iter()
        .flat_map(|&lambda| {
            SEEDS.iter().map(move |&seed| Cell {
                algorithm: Algorithm::Maxmin,
                ensemble_size: 2,
                regularizer,
                lambda,
                seed,
            })
        })
        .collect()
}

fn run(cfg: &ExperimentConfig, cells: &[Cell]) -> Result<RunManifest, String> {
    let m = run_cells(cfg, cells, &cfg.experiment.out_dir).map_err(err)?;
    if let Some(bad) = m.runs.iter().find(|r| r.summary.is_none()) {
        return Err(format!("run {} did not complete: {:?}", bad.id, bad.status));
    }
    Ok(m)
}

/// Per-seed summaries of `method` in seed order.
fn per_seed<'a>(m: &'a RunManifest, method: &str) -> Vec<&'a qdiv_harness::matrix::RunSummary> {
    let mut v: Vec<_> = m.completed().filter(|(e, _)| e.method == method).collect();
    v.sort_by_key(|(e, _)| e.cell.seed);
    v.into_iter().map(|(_, s)| s).collect()
}

fn lambda_by_return(m: &RunManifest, r: RegularizerChoice) -> f64 {
    let mut best = (f64::NEG_INFINITY, LAMBDAS[0]);
    for l in LAMBDAS {
        let method = Cell { regularizer: r, lambda: l, ..Cell::baseline(Algorithm::Maxmin, 2, 0) }.method();
        let rs: Vec<f64> = per_seed(m, &method).iter().map(|s| s.final_return).collect();
        let mean = stats::mean(&rs);
        if mean > best.0 {
            best = (mean, l);
        }
    }
    best.1
}

struct Diversity {
    higher_gini: usize,
    lower_cka: usize,
    lambda: f64,
}

fn diversity(m: &RunManifest, lambda: f64) -> Diversity {
    let method = Cell {
        regularizer: RegularizerChoice::Gini,
        lambda,
        ..Cell::baseline(Algorithm::Maxmin, 2, 0)
    }
    .method();
    let reg = per_seed(m, &method);
    let base = per_seed(m, "baseline");
    let higher_gini = reg.iter().zip(&base).filter(|(r, b)| r.final_gini > b.final_gini).count();
    let lower_cka = reg
        .iter()
        .zip(&base)
        .filter(|(r, b)| matches!((r.final_mean_cka, b.final_mean_cka), (Some(x), Some(y)) if x < y))
        .count();
    Diversity {
        higher_gini,
        lower_cka,
        lambda,
    }
}

fn merge(parts: &[&RunManifest]) -> RunManifest {
    let mut m = parts[0].clone();
    for p in &parts[1..] {
        m.runs.extend(p.runs.iter().cloned());
    }
    m
}

fn c5_diversity(state: &mut Shared) -> Outcome {
    let cfg = catcher_config("diversity");
    let mut cs = SEEDS.iter().map(|&s| Cell::baseline(Algorithm::Maxmin, 2, s)).collect::<Vec<_>>();
    cs.extend(cells(RegularizerChoice::Gini, &LAMBDAS));
    let m = run(&cfg, &cs)?;
    let lambda = lambda_by_return(&m, RegularizerChoice::Gini);
    let d = diversity(&m, lambda);
    state.gini_lambda = Some(lambda);
    state.diversity = Some(m);
    Ok(verdict(
        d.higher_gini >= 4 && d.lower_cka >= 4,
        format!(
            "gini λ={:e} (selected by final-window return): higher final Gini in {}/5 seeds, \
             lower final mean CKA in {}/5 seeds (need ≥ 4 each)",
            d.lambda, d.higher_gini, d.lower_cka
        ),
    ))
}

fn c6_performance(state: &mut Shared) -> Outcome {
    let first = state.diversity.as_ref().ok_or("criterion 5 produced no runs")?;
    let cfg = catcher_config("performance");
    let rest: Vec<Cell> = [
        RegularizerChoice::Atkinson,
        RegularizerChoice::Theil,
        RegularizerChoice::Vol,
        RegularizerChoice::Meanvector,
    ]
    .into_iter()
    .flat_map(|r| cells(r, &LAMBDAS))
    .collect();
    let m = merge(&[first, &run(&cfg, &rest)?]);
    let groups = tables::compute(&m).map_err(err)?;
    let g = groups.first().ok_or("no result group")?;
    let base = g.baseline().ok_or("no baseline")?;
    let best = g.best_regularized().ok_or("no regularized method")?;
    let p = best.p.unwrap_or(1.0);
    let table: Vec<String> = g
        .methods
        .iter()
        .map(|s| {
            format!(
                "{}{} ret {:.2} z {:+.3}",
                s.regularizer.label(),
                s.lambda.map(|l| format!("@{l:e}")).unwrap_or_default(),
                s.mean_return,
                s.z
            )
        })
        .collect();
    Ok(verdict(
        best.mean_return >= base.mean_return && best.z >= base.z && p < 0.05,
        format!(
            "best {}@{:e}: return {:.3} vs baseline {:.3}, z {:+.3} vs {:+.3}, Welch p {:.3} (need < 0.05) [{}]",
            best.regularizer.label(),
            best.lambda.unwrap_or(0.0),
            best.mean_return,
            base.mean_return,
            best.z,
            base.z,
            p,
            table.join("; ")
        ),
    ))
}

fn c10_identical_layers(state: &mut Shared) -> Outcome {
    let lambda = state.gini_lambda.ok_or("criterion 5 selected no λ")?;
    let mut cfg = catcher_config("identical_layers");
    cfg.agent.seed_policy = SeedPolicy::IdenticalLayers;
    let mut cs = SEEDS.iter().map(|&s| Cell::baseline(Algorithm::Maxmin, 2, s)).collect::<Vec<_>>();
    cs.extend(cells(RegularizerChoice::Gini, &[lambda]));
    let m = run(&cfg, &cs)?;
    let initial: Vec<f64> = per_seed(&m, "baseline").iter().filter_map(|s| s.initial_mean_cka).collect();
    let worst = initial.iter().map(|c| (1.0 - c).abs()).fold(0.0, f64::max);
    let d = diversity(&m, lambda);
    Ok(verdict(
        initial.len() == SEEDS.len() && worst < 1e-9 && d.higher_gini >= 3,
        format!(
            "step-0 mean CKA within {worst:.1e} of 1 in {}/5 baselines; gini λ={lambda:e} raises final Gini in {}/5 seeds (need ≥ 3)",
            initial.len(),
            d.higher_gini
        ),
    ))
}

// ---------------------------------------------------------------- criterion 7

fn uniform(r: &mut impl Rng, n: usize, p: usize) -> Tensor {
    Tensor::new(vec![n, p], (0..n * p).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap()
}

fn matmul(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k) = a.dims2().unwrap();
    let (_, n) = b.dims2().unwrap();
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            out[i * n + j] = (0..k).map(|t| a.data()[i * k + t] * b.data()[t * n + j]).sum();
        }
    }
    Tensor::new(vec![m, n], out).unwrap()
}

fn orthogonal(r: &mut impl Rng, p: usize) -> Tensor {
    let g = uniform(r, p, p);
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for j in 0..p {
        let mut v: Vec<f64> = (0..p).map(|i| g.data()[i * p + j]).collect();
        for c in &cols {
            let d: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(c).for_each(|(a, b)| *a -= d * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        cols.push(v.into_iter().map(|a| a / norm).collect());
    }
    Tensor::new(vec![p, p], (0..p * p).map(|k| cols[k % p][k / p]).collect()).unwrap()
}

fn c7_cka() -> Outcome {
    let tol = 1e-9;
    let x = Tensor::new(vec![2, 1], vec![1.0, -1.0]).map_err(err)?;
    let k = linear_gram(&x).map_err(err)?;
    let h = hsic(&k, &k).map_err(err)?;
    if (h - 4.0).abs() > 1e-12 {
        return Ok(verdict(false, format!("HSIC hand example {h} vs 4")));
    }
    let kc = center_gram(&k).map_err(err)?;
    if kc.data().iter().zip(k.data()).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Ok(verdict(false, "HKH differs from K in the hand example"));
    }

    let mut r = rng::stream(77, &[tag::DATA]);
    let mut worst_inv = 0.0f64;
    let mut worst_sym = 0.0f64;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..40 {
        let n = r.random_range(10..60);
        let p = r.random_range(1..6);
        let q = r.random_range(1..6);
        let a = uniform(&mut r, n, p);
        let b = uniform(&mut r, n, q);
        let c = r.random_range(0.01..100.0);
        let rotated = matmul(&a, &orthogonal(&mut r, p));
        let scaled = Tensor::new(vec![n, p], rotated.data().iter().map(|v| c * v).collect()).map_err(err)?;
        let self_sim = cka(&a, &a).map_err(err)?;
        let inv = cka(&a, &scaled).map_err(err)?;
        worst_inv = worst_inv.max((1.0 - self_sim).abs()).max((1.0 - inv).abs());
        let ab = cka(&a, &b).map_err(err)?;
        let ba = cka(&b, &a).map_err(err)?;
        worst_sym = worst_sym.max((ab - ba).abs());
        lo = lo.min(ab);
        hi = hi.max(ab);
        let rotated_pair = cka(&scaled, &b).map_err(err)?;
        worst_inv = worst_inv.max((rotated_pair - ab).abs());
    }
    let in_range = lo >= -tol && hi <= 1.0 + tol;
    Ok(verdict(
        worst_inv <= tol && worst_sym <= tol && in_range,
        format!(
            "HSIC example exact; self/orthogonal/scale max |1 - CKA| {worst_inv:.1e}, \
             symmetry {worst_sym:.1e}, range [{lo:.3}, {hi:.3}]"
        ),
    ))
}

// ---------------------------------------------------------------- criterion 8

fn c8_sine() -> Outcome {
    let res = sine_demo(&SineDemoConfig::new(1, 2)).map_err(err)?;
    let pre = res.pre_output_cka.ok_or("pre-training output CKA undefined")?;
    let post = res.post_output_cka.ok_or("post-training output CKA undefined")?;
    Ok(verdict(
        post > pre && res.mse_a < 0.01 && res.mse_b < 0.01,
        format!(
            "output CKA {:.1}% -> {:.1}% (reference: 0% -> 98%), MSE {:.4} / {:.4} (need < 0.01)",
            100.0 * pre,
            100.0 * post,
            res.mse_a,
            res.mse_b
        ),
    ))
}

// ---------------------------------------------------------------- criterion 9

fn c9_stats() -> Outcome {
    let w = stats::welch_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 3.0, 4.0, 5.0, 6.0]).map_err(err)?;
    let welch_ok = (w.t + 1.0).abs() < 1e-12 && (w.df - 8.0).abs() < 1e-12 && (w.p - 0.3466).abs() < 5e-4;

    let mut pop = ScorePopulation::new();
    for (s, v) in [1.0, 2.0, 3.0].into_iter().enumerate() {
        pop.push("m", s as u64, v);
    }
    let z = stats::z_scores(&pop).map_err(err)?;
    let z3 = z.per_sample[2];
    let z3_ok = (z3 - 1.5f64.sqrt()).abs() < 1e-12;

    let mut pop = ScorePopulation::new();
    let mut r = rng::stream(9, &[tag::DATA]);
    let counts = [5usize, 3, 7, 5];
    for (k, &c) in counts.iter().enumerate() {
        for s in 0..c {
            pop.push(format!("m{k}"), s as u64, r.random_range(-3.0..3.0) + k as f64);
        }
    }
    let z = stats::z_scores(&pop).map_err(err)?;
    let weighted: f64 = z
        .per_method
        .iter()
        .zip(counts)
        .map(|((_, m), c)| m * c as f64)
        .sum();
    let degenerate = {
        let mut p = ScorePopulation::new();
        p.push("a", 0, 1.0);
        p.push("b", 0, 1.0);
        stats::z_scores(&p).is_err()
    };
    let p_normal = 2.0 * (1.0 - stats::student_t_cdf(1.96, 1000.0));
    let cdf_ok = stats::student_t_cdf(0.0, 7.0) == 0.5;
    let pass = welch_ok && z3_ok && weighted.abs() < 1e-9 && degenerate && (p_normal - 0.05).abs() < 1e-3 && cdf_ok;
    Ok(verdict(
        pass,
        format!(
            "Welch t {:.4}, ν {:.4}, p {:.4}; z(3) {z3:.4}; weighted z sum {weighted:.1e}; \
             zero-variance rejected {degenerate}; p(1.96, ν=1000) {p_normal:.4}",
            w.t, w.df, w.p
        ),
    ))
}

// ---------------------------------------------------------------- driver

#[derive(Default)]
struct Shared {
    diversity: Option<RunManifest>,
    gini_lambda: Option<f64>,
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn(&mut Shared) -> Outcome,
}

fn main() {
    let only: Vec<u32> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect())
        .unwrap_or_default();
    let secs = Duration::from_secs;
    let criteria = [
        Criterion { id: 1, name: "regularizer oracles", budget: secs(1), run: |_| c1_regularizer_oracles() },
        Criterion { id: 2, name: "gradients", budget: secs(10), run: |_| c2_gradients() },
        Criterion { id: 3, name: "lambda = 0 equivalence", budget: secs(60), run: |_| c3_zero_lambda() },
        Criterion { id: 4, name: "overestimation bias", budget: secs(600), run: |_| c4_overestimation() },
        Criterion { id: 5, name: "diversity effect", budget: secs(3600), run: c5_diversity },
        Criterion { id: 6, name: "performance direction", budget: secs(7200), run: c6_performance },
        Criterion { id: 7, name: "CKA properties", budget: secs(5), run: |_| c7_cka() },
        Criterion { id: 8, name: "sine demo", budget: secs(120), run: |_| c8_sine() },
        Criterion { id: 9, name: "stats oracle", budget: secs(1), run: |_| c9_stats() },
        Criterion { id: 10, name: "identical layers", budget: secs(3600), run: c10_identical_layers },
    ];

    let mut state = Shared::default();
    let mut lines = Vec::new();
    let mut failed = 0;
    for c in &criteria {
        if !only.is_empty() && !only.contains(&c.id) {
            continue;
        }
        let start = Instant::now();
        let outcome = (c.run)(&mut state);
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.budget;
        let (pass, detail) = match outcome {
            Ok(v) => (v.pass && in_time, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let timing = format!(
            "{:.2}s of {}s{}",
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
        let line = format!(
            "criterion {:>2} {} {}: {} ({})",
            c.id,
            if pass { "PASS" } else { "FAIL" },
            c.name,
            detail,
            timing
        );
        println!("{line}");
        lines.push(line);
        failed += usize::from(!pass);
    }
    println!();
    println!("acceptance: {} passed, {} failed", lines.len() - failed, failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
