use frobsym_core::geometry::PotentialField;
use frobsym_core::poisson::{evolution_derivative, Observable};
use frobsym_core::symplectic::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

/// `φ = (z₊¹z₋¹)² + (z₊²z₋²)² + (z₊¹+z₊²)²(z₋¹+z₋²)²` on `(z₊¹, z₊², z₋¹, z₋²)`.
/// Its mixed block `∂₊∂₋φ` is symmetric.
fn coupled_potential() -> PotentialField {
    PotentialField::new(4, |z| {
        let (s, t) = (z[0] + z[1], z[2] + z[3]);
        (z[0] * z[2]).powi(2) + (z[1] * z[3]).powi(2) + (s * t).powi(2)
    })
    .with_hessian(|z| {
        let (p1, p2, m1, m2) = (z[0], z[1], z[2], z[3]);
        let (s, t) = (p1 + p2, m1 + m2);
        let st = 4.0 * s * t;
        DMatrix::from_row_slice(
            4,
            4,
            &[
                2.0 * m1 * m1 + 2.0 * t * t, 2.0 * t * t, 4.0 * p1 * m1 + st, st,
                2.0 * t * t, 2.0 * m2 * m2 + 2.0 * t * t, st, 4.0 * p2 * m2 + st,
                4.0 * p1 * m1 + st, st, 2.0 * p1 * p1 + 2.0 * s * s, 2.0 * s * s,
                st, 4.0 * p2 * m2 + st, 2.0 * s * s, 2.0 * p2 * p2 + 2.0 * s * s,
            ],
        )
    })
}

fn sample_points() -> Vec<Vec<f64>> {
    vec![vec![0.3, -0.2, 0.5, 0.1], vec![1.1, 0.4, -0.6, 0.9], vec![-0.8, 1.3, 0.2, -0.4]]
}

#[test]
fn potential_derived_form_is_closed() {
    let form = paracomplex_two_form(2, dolbeault_metric(coupled_potential()));
    let r = closedness_residual(&form, &sample_points()).unwrap();
    assert!(r < 1e-5, "{r}");
}

#[test]
fn one_dimensional_potential_form_is_closed() {
    let phi = PotentialField::new(2, |z| (z[0] * z[1]).powi(2));
    let form = paracomplex_two_form(1, dolbeault_metric(phi));
    assert!(closedness_residual(&form, &[vec![0.4, 0.9], vec![-1.0, 0.3]]).unwrap() < 1e-5);
}

#[test]
fn splitting_suite() {
    let forms = [
        DenseForm::function(2, |z| z[0] * z[1]),
        DenseForm::function(2, |z| z[0].sin() * z[1].cos()),
        DenseForm::function(4, |z| z[0] * z[0] * z[3] + z[1] * z[2].exp()),
        DenseForm::one_form(4, |z| vec![z[1] * z[2], z[0].sin() * z[3], z[3] * z[3], (z[0] - z[2]).cos()]),
    ];
    let pts2 = vec![vec![0.2, 0.9], vec![-1.1, 0.4]];
    let r = dbar_split_residuals(&forms[..2], &pts2).unwrap();
    assert!(r.max() < 1e-5, "{r:?}");
    let pts4 = vec![vec![0.2, 0.9, -0.3, 0.5], vec![-1.1, 0.4, 0.8, 0.0]];
    let r = dbar_split_residuals(&forms[2..], &pts4).unwrap();
    assert!(r.max() < 1e-5, "{r:?}");
}

#[test]
fn energy_drift_is_second_order() {
    let sys = HamiltonianSystem::harmonic_oscillator();
    let y0 = PhasePoint::new(vec![1.0], vec![0.0]).unwrap();
    let slope = drift_order(&sys, &y0, 10.0, &[1e-3, 2e-3, 5e-3, 1e-2]).unwrap();
    assert!((slope - 2.0).abs() < 0.2, "{slope}");
    let d1 = integrate(&sys, &y0, 4e-3, 2500).unwrap().max_energy_drift;
    let d2 = integrate(&sys, &y0, 2e-3, 5000).unwrap().max_energy_drift;
    assert!((d1 / d2 - 4.0).abs() < 0.4, "{}", d1 / d2);
}

#[test]
fn bracket_evolution_matches_the_flow() {
    let h = HamiltonianSystem::harmonic_oscillator();
    let obs = h.observable(1);
    for (x, p) in [(1.0, 0.0), (0.4, -0.8)] {
        let y0 = PhasePoint::new(vec![x], vec![p]).unwrap();
        let dt = 1e-6;
        let t = integrate(&h, &y0, dt, 1).unwrap();
        let fd = (t.records[1].z[0] - x) / dt;
        let br = evolution_derivative(&obs, &Observable::coordinate(0), &[x, p]).unwrap();
        assert!((fd - br).abs() < 1e-6, "{fd} vs {br}");
    }
}

#[test]
fn separable_and_implicit_integrators_agree() {
    let general = HamiltonianSystem::General(
        Observable::new(|y| 0.5 * (y[0] * y[0] + y[1] * y[1])).with_gradient(|y| vec![y[0], y[1]]),
    );
    let y0 = PhasePoint::new(vec![0.7], vec![0.2]).unwrap();
    let a = integrate(&HamiltonianSystem::harmonic_oscillator(), &y0, 1e-3, 1000).unwrap();
    let b = integrate(&general, &y0, 1e-3, 1000).unwrap();
    let (ra, rb) = (a.records.last().unwrap(), b.records.last().unwrap());
    assert!((ra.z[0] - rb.z[0]).abs() < 1e-6 && (ra.p[0] - rb.p[0]).abs() < 1e-6);
    let exact = (0.7 * 1f64.cos() + 0.2 * 1f64.sin(), -0.7 * 1f64.sin() + 0.2 * 1f64.cos());
    assert!((rb.z[0] - exact.0).abs() < 1e-6 && (rb.p[0] - exact.1).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nondegenerate_forms_invert(entries in prop::collection::vec(-3.0..3.0f64, 6)) {
        let mut j = DMatrix::zeros(4, 4);
        let mut it = entries.iter();
        for a in 0..4 {
            for b in a + 1..4 {
                let v = *it.next().unwrap();
                j[(a, b)] = v;
                j[(b, a)] = -v;
            }
        }
        // Pfaffian of a 4×4 skew matrix
        let pf = j[(0, 1)] * j[(2, 3)] - j[(0, 2)] * j[(1, 3)] + j[(0, 3)] * j[(1, 2)];
        prop_assume!(pf.abs() > 0.1);
        let form = TwoForm::constant(j.clone());
        let y = [0.0; 4];
        let inv = form.inverse(&y).unwrap();
        prop_assert!((&j * inv - DMatrix::identity(4, 4)).amax() < 1e-10);
        prop_assert_eq!(form.eval(&y).unwrap(), j);
    }

    #[test]
    fn legendre_map_inverts(xi in prop::collection::vec(-3.0..3.0f64, 4), z in prop::collection::vec(-1.0..1.0f64, 4)) {
        let lag = LorentzLagrangian::minkowski();
        let out = legendre_hamiltonian(&lag, &xi, &z).unwrap();
        let back = lag.inverse_legendre(&z, &out.p).unwrap();
        for (a, b) in back.iter().zip(&xi) {
            prop_assert!((a - b).abs() < 1e-8);
        }
        // ∂H/∂p = ξ
        for mu in 0..4 {
            let h = 1e-5;
            let mut pp = out.p.clone();
            let mut pm = out.p.clone();
            pp[mu] += h;
            pm[mu] -= h;
            let d = (lag.hamiltonian(&z, &pp).unwrap() - lag.hamiltonian(&z, &pm).unwrap()) / (2.0 * h);
            prop_assert!((d - xi[mu]).abs() < 1e-8, "{} vs {}", d, xi[mu]);
        }
    }

    #[test]
    fn realified_forms_are_antisymmetrized_exactly(g in prop::collection::vec(-3.0..3.0f64, 3)) {
        let gm = DMatrix::from_row_slice(2, 2, &[g[0], g[1], g[1], g[2]]);
        let j = realify_paracomplex_form(&gm).unwrap();
        prop_assert_eq!(&j, &((&j - j.transpose()) * 0.5));
    }
}
