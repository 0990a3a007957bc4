use frobsym_core::frobenius::*;
use frobsym_core::geometry::{MetricField, PotentialField};
use frobsym_core::statmanifold::CumulantTensor;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `½x₁²x₂ + f(x₂)` with `f = x₂⁴ + sin x₂`, flat metric antidiagonal.
fn two_dim_antidiagonal() -> PotentialField {
    PotentialField::new(2, |x| 0.5 * x[0] * x[0] * x[1] + x[1].powi(4) + x[1].sin()).with_third(|x| {
        let mut t = vec![0.0; 8];
        for idx in [[0, 0, 1], [0, 1, 0], [1, 0, 0]] {
            t[idx[0] * 4 + idx[1] * 2 + idx[2]] = 1.0;
        }
        t[7] = 24.0 * x[1] - x[1].cos();
        t
    })
}

/// `x₁³/6 + x₁x₂²/2 + x₂⁵`, flat metric the identity.
fn two_dim_euclidean() -> PotentialField {
    PotentialField::new(2, |x| x[0].powi(3) / 6.0 + 0.5 * x[0] * x[1] * x[1] + x[1].powi(5)).with_third(|x| {
        let mut t = vec![0.0; 8];
        t[0] = 1.0;
        for idx in [[0, 1, 1], [1, 0, 1], [1, 1, 0]] {
            t[idx[0] * 4 + idx[1] * 2 + idx[2]] = 1.0;
        }
        t[7] = 60.0 * x[1] * x[1];
        t
    })
}

#[test]
fn two_dimensional_potentials_have_no_obstruction() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let x = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let r = wdvv_residual(&two_dim_antidiagonal(), &antidiagonal_metric(2), &x).unwrap();
        assert!(r.relative < 1e-12, "{r:?}");
        let r = wdvv_residual(&two_dim_euclidean(), &MetricField::euclidean(2), &x).unwrap();
        assert!(r.relative < 1e-12, "{r:?}");
    }
}

#[test]
fn wdvv_and_associativity_agree_on_fixtures() {
    let g = antidiagonal_metric(3);
    for x in [[0.0, 1.0, 1.0], [0.5, -0.3, 2.0], [1.5, 0.2, -0.7]] {
        for (c, holds) in [(0.0, true), (0.1, false)] {
            let w = wdvv_residual(&cubic_potential3(c), &g, &x).unwrap();
            let a = algebra_at(&cubic_potential3(c), &g, &x).unwrap().axioms().associativity;
            if holds {
                assert!(w.relative < 1e-12 && a < 1e-12);
            } else {
                assert!(w.relative > 1e-3 && a > 1e-3, "{w:?} {a}");
            }
        }
    }
}

#[test]
fn perturbed_potential_fails_at_reference_point() {
    let r = wdvv_residual(&cubic_potential3(0.1), &antidiagonal_metric(3), &[0.0, 1.0, 1.0]).unwrap();
    assert!(r.relative > 1e-2);
    let r0 = wdvv_residual(&cubic_potential3(0.0), &antidiagonal_metric(3), &[0.0, 1.0, 1.0]).unwrap();
    assert!(r0.relative < 1e-8);
}

#[test]
fn finite_difference_third_derivatives_reproduce_wdvv() {
    let analytic = cubic_potential3(0.0);
    let numeric = PotentialField::new(3, move |x| analytic.eval_unchecked(x));
    let r = wdvv_residual(&numeric, &antidiagonal_metric(3), &[0.3, 0.4, -0.2]).unwrap();
    assert!(r.relative < 1e-8, "{r:?}");
}

#[test]
fn novikov_linear_diagonal_metric() {
    let g = MetricField::new(3, |u| DMatrix::from_fn(3, 3, |i, j| if i == j { u[i] } else { 0.0 }));
    let half = ProductTensor::from_fn(3, |i, j, k| if i == j && j == k { 0.5 } else { 0.0 });
    let r = novikov_residuals(&half, &g, &[1.3, 0.7, 2.2]).unwrap();
    assert!(r.symmetrization < 1e-8, "{r:?}");
    assert_eq!(r.left_symmetry, 0.0);
    assert_eq!(r.right_identity, 0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let random = ProductTensor::from_data(3, (0..27).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    assert!(novikov_residuals(&random, &g, &[1.3, 0.7, 2.2]).unwrap().symmetrization > 1e-3);
}

#[test]
fn idempotents_are_closed_under_reflection() {
    let id = find_idempotents_rank2(&FrobeniusAlgebra::paracomplex()).unwrap();
    for p in &id.points {
        assert!(id.contains([p[0], -p[1]], 1e-12));
    }
}

fn random_symmetric_tensor(rng: &mut ChaCha8Rng, n: usize) -> CumulantTensor {
    let raw: Vec<f64> = (0..n * n * n).map(|_| rng.random_range(-2.0..2.0)).collect();
    // each sorted index triple reads its own entry, so the result is symmetric
    CumulantTensor::from_fn(n, 3, |idx| raw[(idx[0] * n + idx[1]) * n + idx[2]])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn potential_algebras_have_invariant_pairings(seed in any::<u64>(), n in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_symmetric_tensor(&mut rng, n);
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let g = &m * m.transpose() + DMatrix::identity(n, n);
        let alg = algebra_from_potential(&t, &g).unwrap();
        let r = alg.axioms();
        prop_assert!(r.pairing_invariance < 1e-10, "{:?}", r);
        prop_assert!(r.commutativity < 1e-12);
        // Φ(u, v, w) = ⟨u∘v, w⟩
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut direct = 0.0;
        for a in 0..n { for b in 0..n { for c in 0..n {
            direct += t.get(&[a, b, c]) * u[a] * v[b] * w[c];
        }}}
        prop_assert!((alg.pair(&alg.multiply(&u, &v), &w) - direct).abs() < 1e-10);
    }

    #[test]
    fn wdvv_ignores_quadratic_terms(
        seed in any::<u64>(),
        x in prop::collection::vec(-2.0..2.0f64, 3),
        c in -0.5..0.5f64,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-3.0..3.0));
        let b: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
        let base = cubic_potential3(c);
        let shifted = base.plus_quadratic(a.clone(), b.clone(), rng.random_range(-1.0..1.0)).unwrap();
        let g = antidiagonal_metric(3);
        let r0 = wdvv_residual(&base, &g, &x).unwrap();
        let r1 = wdvv_residual(&shifted, &g, &x).unwrap();
        prop_assert!((r0.relative - r1.relative).abs() < 1e-10);
        prop_assert!((shifted.hessian(&x).unwrap() - base.hessian(&x).unwrap() - (&a + a.transpose()) * 0.5).amax() < 1e-12);
    }
}
