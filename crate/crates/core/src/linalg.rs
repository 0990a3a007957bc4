//! Thin helpers over nalgebra for the small dense matrices used here.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Ratio of largest to smallest singular value; `inf` for singular input.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return f64::INFINITY;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn solve(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    m.clone().lu().solve(rhs)
}

/// Inverse of a metric-like matrix, refusing condition numbers above `max_condition`.
pub fn checked_inverse(m: &DMatrix<f64>, max_condition: f64) -> Result<DMatrix<f64>> {
    let condition = condition_number(m);
    if !(condition <= max_condition) {
        return Err(Error::DegenerateMetric { condition });
    }
    m.clone()
        .try_inverse()
        .ok_or(Error::DegenerateMetric { condition })
}

pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
}

/// `max |m - mᵀ|`
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

/// `max |m + mᵀ|`
pub fn skew_residual(m: &DMatrix<f64>) -> f64 {
    (m + m.transpose()).amax()
}

/// Real roots of `Σ coeffs[i] tⁱ` via companion-matrix eigenvalues, polished
/// by Newton steps. Leading coefficients that vanish relative to the largest
/// one are dropped. Returns `None` when every coefficient vanishes.
pub fn real_poly_roots(coeffs: &[f64]) -> Option<Vec<f64>> {
    let scale = coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    if scale == 0.0 {
        return None;
    }
    let mut deg = coeffs.len() - 1;
    while deg > 0 && coeffs[deg].abs() <= 1e-13 * scale {
        deg -= 1;
    }
    if deg == 0 {
        return Some(Vec::new());
    }
    let lead = coeffs[deg];
    let mut companion = DMatrix::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -coeffs[i] / lead;
    }
    let eig = companion.complex_eigenvalues();
    let eval = |t: f64| coeffs[..=deg].iter().rev().fold(0.0, |acc, c| acc * t + c);
    let deriv = |t: f64| {
        coeffs[1..=deg]
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (i, c)| acc * t + (i as f64 + 1.0) * c)
    };
    let mut roots = Vec::new();
    for z in eig.iter() {
        if z.im.abs() > 1e-6 * z.re.abs().max(1.0) {
            continue;
        }
        let mut t = z.re;
        for _ in 0..8 {
            let d = deriv(t);
            if d == 0.0 {
                break;
            }
            let step = eval(t) / d;
            if !step.is_finite() {
                break;
            }
            t -= step;
        }
        if !roots.iter().any(|r: &f64| (r - t).abs() <= 1e-9 * t.abs().max(1.0)) {
            roots.push(t);
        }
    }
    roots.sort_by(f64::total_cmp);
    Some(roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_roots() {
        // (t - 1)(t + 2)(t - 3) = t³ - 2t² - 5t + 6
        let r = real_poly_roots(&[6.0, -5.0, -2.0, 1.0]).unwrap();
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([-2.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_polynomials() {
        assert!(real_poly_roots(&[0.0, 0.0]).is_none());
        assert_eq!(real_poly_roots(&[2.0, 0.0, 0.0]).unwrap(), Vec::<f64>::new());
        // t² + 1 has no real roots
        assert!(real_poly_roots(&[1.0, 0.0, 1.0]).unwrap().is_empty());
    }

    #[test]
    fn condition_of_singular_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(condition_number(&m) > 1e15);
        assert!(checked_inverse(&m, 1e12).is_err());
    }
}
