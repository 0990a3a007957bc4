use frobsym_core::paracomplex::{hermitian_product, IdempotentCoords, ParaNumber, ParaVector};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: ParaNumber, b: ParaNumber, tol: f64) -> bool {
    (a.re - b.re).abs() <= tol && (a.im - b.im).abs() <= tol
}

fn random_number(rng: &mut ChaCha8Rng) -> ParaNumber {
    ParaNumber::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0))
}

/// A number whose idempotent components are bounded away from zero.
fn random_unit(rng: &mut ChaCha8Rng) -> ParaNumber {
    let mut side = || {
        let mag = rng.random_range(0.1..10.0);
        if rng.random_bool(0.5) {
            mag
        } else {
            -mag
        }
    };
    IdempotentCoords::new(side(), side()).recompose()
}

#[test]
fn algebra_laws_over_ten_thousand_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let e = ParaNumber::E;
    let (ep, em) = (ParaNumber::E_PLUS, ParaNumber::E_MINUS);
    assert_eq!(e * e, ParaNumber::ONE);
    assert_eq!(ep * ep, ep);
    assert_eq!(em * em, em);
    assert_eq!(ep * em, ParaNumber::ZERO);
    assert_eq!(ep + em, ParaNumber::ONE);
    for _ in 0..10_000 {
        let (a, b) = (random_number(&mut rng), random_number(&mut rng));
        let scale = 1f64.max(a.norm_sq().abs().sqrt() * b.norm_sq().abs().sqrt()).max(100.0);
        assert!(close((a * b).conj(), a.conj() * b.conj(), 1e-12 * scale));
        assert!(close(a * b, b * a, 0.0));
        assert!(close(a.decompose().recompose(), a, 1e-12 * 10.0));
        let u = random_unit(&mut rng);
        let inv = u.inverse().unwrap();
        assert!(close(u * inv, ParaNumber::ONE, 1e-12), "{u} {inv}");
        assert!(close(inv.inverse().unwrap(), u, 1e-12 * u.re.abs().max(u.im.abs()).max(1.0)));
    }
}

#[test]
fn zero_divisors_have_no_inverse() {
    for z in [ParaNumber::E_PLUS, ParaNumber::E_MINUS, ParaNumber::new(3.0, -3.0), ParaNumber::ZERO] {
        assert!(z.is_zero_divisor());
        assert!(z.inverse().is_err());
    }
}

proptest! {
    #[test]
    fn peirce_reflection_is_an_involutive_automorphism(
        ar in -50.0..50.0f64, ai in -50.0..50.0f64, br in -50.0..50.0f64, bi in -50.0..50.0f64
    ) {
        let (a, b) = (ParaNumber::new(ar, ai), ParaNumber::new(br, bi));
        prop_assert!(close(a.peirce_reflect().peirce_reflect(), a, 1e-12 * 100.0));
        prop_assert!(close(a.peirce_reflect(), a.conj(), 1e-12 * 100.0));
        prop_assert!(close((a * b).peirce_reflect(), a.peirce_reflect() * b.peirce_reflect(), 1e-12 * 1e4));
        let d = a.decompose();
        let r = a.peirce_reflect().decompose();
        prop_assert!((d.plus - r.minus).abs() <= 1e-12 * (1.0 + d.plus.abs()));
        prop_assert!((d.minus - r.plus).abs() <= 1e-12 * (1.0 + d.minus.abs()));
    }

    #[test]
    fn multiplication_is_componentwise_in_idempotent_coordinates(
        ar in -20.0..20.0f64, ai in -20.0..20.0f64, br in -20.0..20.0f64, bi in -20.0..20.0f64
    ) {
        let (a, b) = (ParaNumber::new(ar, ai), ParaNumber::new(br, bi));
        let via = a.decompose().mul(b.decompose()).recompose();
        prop_assert!(close(via, a * b, 1e-11));
    }

    #[test]
    fn hermitian_product_is_symmetric_under_conjugation(
        xs in prop::collection::vec(-5.0..5.0f64, 4),
        ys in prop::collection::vec(-5.0..5.0f64, 4),
        g01 in -2.0..2.0f64,
    ) {
        let g = DMatrix::from_row_slice(2, 2, &[3.0, g01, g01, 2.0]);
        let xi = ParaVector::from_parts(&xs[..2], &xs[2..]).unwrap();
        let eta = ParaVector::from_parts(&ys[..2], &ys[2..]).unwrap();
        let a = hermitian_product(&g, &xi, &eta).unwrap();
        let b = hermitian_product(&g, &eta, &xi).unwrap();
        prop_assert!(close(a, b.conj(), 1e-12));
        prop_assert_eq!(hermitian_product(&g, &xi, &xi).unwrap().im, 0.0);
    }
}
