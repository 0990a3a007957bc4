//! Cumulant tensors against independent finite differences of the potential.

use frobsym_core::statmanifold::ExponentialFamily;
use proptest::prelude::*;

/// `∂_{idx[0]} ∂_{idx[1]} ... f` by nested fourth-order central differences.
fn nested(f: &dyn Fn(&[f64]) -> f64, x: &[f64], idx: &[usize], h: f64) -> f64 {
    match idx.split_first() {
        None => f(x),
        Some((&i, rest)) => {
            let at = |offset: f64| {
                let mut y = x.to_vec();
                y[i] += offset * h;
                nested(f, &y, rest, h)
            };
            (8.0 * (at(1.0) - at(-1.0)) - (at(2.0) - at(-2.0))) / (12.0 * h)
        }
    }
}

fn indices(n: usize, order: usize) -> Vec<Vec<usize>> {
    (0..n.pow(order as u32))
        .map(|mut flat| {
            let mut idx = vec![0; order];
            for slot in idx.iter_mut().rev() {
                *slot = flat % n;
                flat /= n;
            }
            idx
        })
        .collect()
}

fn check_family(fam: &ExponentialFamily, beta: &[f64]) {
    let phi = |b: &[f64]| fam.potential(b).unwrap();
    for (order, h, tol) in [(1, 1e-3, 1e-6), (2, 1e-2, 1e-6), (3, 1e-2, 1e-6), (4, 1e-2, 1e-4)] {
        let t = fam.cumulant_tensor(beta, order).unwrap();
        for idx in indices(fam.dim(), order) {
            let analytic = t.get(&idx);
            let numeric = nested(&phi, beta, &idx, h);
            assert!(
                (analytic - numeric).abs() <= tol * analytic.abs().max(1.0),
                "order {order} idx {idx:?} at {beta:?}: {analytic} vs {numeric}"
            );
        }
    }
}

#[test]
fn bernoulli_cumulants_match_finite_differences() {
    let fam = ExponentialFamily::bernoulli();
    for b in [-2.0, -0.3, 0.0, 0.7, 3.0] {
        check_family(&fam, &[b]);
    }
}

#[test]
fn categorical_cumulants_match_finite_differences() {
    let fam = ExponentialFamily::categorical3();
    for beta in [[0.0, 0.0], [0.4, -0.9], [-1.5, 2.0]] {
        check_family(&fam, &beta);
    }
}

#[test]
fn bernoulli_at_origin() {
    let fam = ExponentialFamily::bernoulli();
    assert_eq!(fam.metric(&[0.0]).unwrap()[(0, 0)], 0.25);
    assert_eq!(fam.cumulant_tensor(&[0.0], 3).unwrap().get(&[0, 0, 0]), 0.0);
    assert_eq!(fam.cumulant_tensor(&[0.0], 4).unwrap().get(&[0, 0, 0, 0]), -0.125);
}

proptest! {
    #[test]
    fn cumulant_tensors_are_symmetric(b0 in -3.0..3.0f64, b1 in -3.0..3.0f64) {
        let fam = ExponentialFamily::categorical3();
        for order in 2..=4 {
            prop_assert_eq!(fam.cumulant_tensor(&[b0, b1], order).unwrap().symmetry_residual(), 0.0);
        }
    }

    #[test]
    fn fisher_metric_is_positive_definite(b0 in -3.0..3.0f64, b1 in -3.0..3.0f64) {
        let g = ExponentialFamily::categorical3().metric(&[b0, b1]).unwrap();
        let eig = g.symmetric_eigenvalues();
        prop_assert!(eig.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn legendre_map_round_trips(b0 in -2.0..2.0f64, b1 in -2.0..2.0f64) {
        let fam = ExponentialFamily::categorical3();
        let dual = fam.dual_coordinates(&[b0, b1]).unwrap();
        let back = fam.beta_from_eta(&dual.eta, &[0.0, 0.0]).unwrap();
        prop_assert!((back[0] - b0).abs() < 1e-8 && (back[1] - b1).abs() < 1e-8);
        let psi = fam.dual_potential(&dual.eta, &[0.0, 0.0]).unwrap();
        prop_assert!((psi - dual.psi).abs() < 1e-10);
    }

    #[test]
    fn shifting_a_statistic_adds_a_linear_term(b in -2.0..2.0f64, c in -1.0..1.0f64) {
        let fam = ExponentialFamily::bernoulli();
        let shifted = fam.shift_statistic(0, c).unwrap();
        let lhs = shifted.potential(&[b]).unwrap();
        prop_assert!((lhs - (fam.potential(&[b]).unwrap() - b * c)).abs() < 1e-12);
        let g0 = fam.metric(&[b]).unwrap()[(0, 0)];
        prop_assert!((shifted.metric(&[b]).unwrap()[(0, 0)] - g0).abs() < 1e-14);
    }
}
