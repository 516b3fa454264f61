//! Inequality measures against brute-force formulas and finite differences.

use proptest::prelude::*;
use qdiv_core::regularizers::{
    atkinson, atkinson_with, gini, mean_vector, theil, variance_of_logarithms, AtkinsonUnitForm, NormList,
    RegularizerKind,
};

fn nl(v: &[f64]) -> NormList {
    NormList::new(v.to_vec()).unwrap()
}

mod brute {
    fn mean(l: &[f64]) -> f64 {
        l.iter().sum::<f64>() / l.len() as f64
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
        l.iter().map(|x| (x / m) * (x / m).ln()).sum::<f64>() / l.len() as f64
    }

    pub fn vol(l: &[f64]) -> f64 {
        let n = l.len() as f64;
        let lg = l.iter().product::<f64>().powf(1.0 / n).ln();
        l.iter().map(|x| (x.ln() - lg).powi(2)).sum::<f64>() / n
    }

    pub fn atkinson(l: &[f64], eps: f64) -> f64 {
        let n = l.len() as f64;
        if eps == 1.0 {
            1.0 - l.iter().product::<f64>().powf(1.0 / n) / mean(l)
        } else {
            let pm = (l.iter().map(|x| x.powf(1.0 - eps)).sum::<f64>() / n).powf(1.0 / (1.0 - eps));
            1.0 - pm / mean(l)
        }
    }

    pub fn mean_vector(l: &[f64], i: usize) -> f64 {
        (mean(l) - l[i]).powi(2)
    }
}

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

/// Richardson-extrapolated central difference in ℓᵢ.
fn fd_grad(kind: &RegularizerKind, l: &[f64], i: usize) -> f64 {
    let central = |h: f64| {
        let mut hi = l.to_vec();
        let mut lo = l.to_vec();
        hi[i] += h;
        lo[i] -= h;
        (kind.value(&nl(&hi), i).unwrap() - kind.value(&nl(&lo), i).unwrap()) / (2.0 * h)
    };
    // stay inside the smooth piece for Gini's |ℓᵢ − ℓⱼ| kinks
    let gap = l
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, x)| (x - l[i]).abs())
        .fold(f64::INFINITY, f64::min);
    let h = (1e-3 * l[i]).min(0.25 * gap);
    (4.0 * central(h / 2.0) - central(h)) / 3.0
}

fn norms() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.1f64..10.0, 2..8)
}

#[test]
fn worked_examples_against_brute_force() {
    for l in [vec![1.0, 3.0], vec![1.0, 1.0, 4.0], vec![0.5, 2.0, 7.0, 3.3]] {
        let n = nl(&l);
        assert!((gini(&n) - brute::gini(&l)).abs() < 1e-12);
        assert!((theil(&n) - brute::theil(&l)).abs() < 1e-12);
        assert!((variance_of_logarithms(&n) - brute::vol(&l)).abs() < 1e-12);
        for i in 0..l.len() {
            assert!((mean_vector(&n, i).unwrap() - brute::mean_vector(&l, i)).abs() < 1e-12);
        }
        for eps in [0.0, 0.5, 1.0, 2.0, 3.5] {
            assert!((atkinson(&n, eps).unwrap() - brute::atkinson(&l, eps)).abs() < 1e-12);
        }
    }
    let l = nl(&[1.0, 3.0]);
    assert!((atkinson(&l, 0.5).unwrap() - 0.0670).abs() < 5e-5);
    assert!((atkinson(&l, 1.0).unwrap() - 0.1340).abs() < 5e-5);
}

#[test]
fn literal_unit_form_differs_from_geometric_mean() {
    let l = nl(&[1.0, 3.0]);
    let lit = atkinson_with(&l, 1.0, AtkinsonUnitForm::ScaledProduct).unwrap();
    // 1 − (1/2)·(3/2)^(1/2)
    assert!((lit - (1.0 - 0.5 * 1.5f64.sqrt())).abs() < 1e-12);
    assert!((lit - atkinson(&l, 1.0).unwrap()).abs() > 1e-3);
}

#[test]
fn mean_vector_gradient_example() {
    let l = nl(&[1.0, 3.0]);
    assert_eq!(RegularizerKind::MeanVector.grad(&l, 0).unwrap(), -1.0);
    assert!(mean_vector(&l, 2).is_err());
}

#[test]
fn gini_subgradient_is_zero_at_equality() {
    let l = nl(&[2.0, 2.0, 2.0]);
    for i in 0..3 {
        assert_eq!(RegularizerKind::Gini.grad(&l, i).unwrap(), 0.0);
    }
}

#[test]
fn negative_aversion_is_rejected() {
    assert!(RegularizerKind::atkinson(-0.1).is_err());
    assert!(atkinson(&nl(&[1.0, 2.0]), -1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gradients_match_finite_differences(l in norms(), pick in any::<prop::sample::Index>()) {
        let i = pick.index(l.len());
        prop_assume!(l.iter().enumerate().all(|(j, x)| j == i || (x - l[i]).abs() > 1e-4));
        for kind in kinds() {
            let g = kind.grad(&nl(&l), i).unwrap();
            let n = fd_grad(&kind, &l, i);
            let rel = (g - n).abs() / g.abs().max(n.abs()).max(1e-6);
            prop_assert!(rel < 1e-6, "{}: analytic {} numeric {}", kind.label(), g, n);
        }
    }

    #[test]
    fn zero_at_equality_and_nonnegative(v in 0.01f64..100.0, n in 2usize..8, l in norms()) {
        let eq = nl(&vec![v; n]);
        for kind in kinds() {
            prop_assert!(kind.value(&eq, 0).unwrap().abs() < 1e-12);
            prop_assert!(kind.value(&nl(&l), 0).unwrap() >= -1e-15);
        }
    }

    #[test]
    fn scale_invariance(l in norms(), c in 0.01f64..100.0) {
        let scaled: Vec<f64> = l.iter().map(|x| x * c).collect();
        let (a, b) = (nl(&l), nl(&scaled));
        for kind in kinds() {
            let (va, vb) = (kind.value(&a, 0).unwrap(), kind.value(&b, 0).unwrap());
            match kind {
                RegularizerKind::MeanVector => prop_assert!((vb - c * c * va).abs() <= 1e-9 * vb.abs().max(1.0)),
                _ => prop_assert!((va - vb).abs() < 1e-9),
            }
        }
    }

    #[test]
    fn bounded_unit_interval(l in norms(), eps in 0.0f64..5.0) {
        let a = atkinson(&nl(&l), eps).unwrap();
        let g = gini(&nl(&l));
        prop_assert!((0.0..1.0).contains(&a) || a.abs() < 1e-15);
        prop_assert!((0.0..1.0).contains(&g));
    }

    #[test]
    fn permutation_symmetry(l in norms(), seed in any::<u64>()) {
        let mut p = l.clone();
        // deterministic shuffle by rotating and reversing
        let k = (seed as usize) % p.len();
        p.rotate_left(k);
        if seed & 1 == 1 { p.reverse(); }
        let (a, b) = (nl(&l), nl(&p));
        prop_assert!((gini(&a) - gini(&b)).abs() < 1e-12);
        prop_assert!((theil(&a) - theil(&b)).abs() < 1e-12);
        prop_assert!((variance_of_logarithms(&a) - variance_of_logarithms(&b)).abs() < 1e-12);
        prop_assert!((atkinson(&a, 0.7).unwrap() - atkinson(&b, 0.7).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn atkinson_unit_limit(l in norms()) {
        let a = nl(&l);
        let near = atkinson(&a, 1.0 - 1e-6).unwrap();
        prop_assert!((near - atkinson(&a, 1.0).unwrap()).abs() < 1e-4);
    }
}
