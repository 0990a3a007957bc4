//! Central finite-difference stencils.
//!
//! Step sizes scale with the magnitude of the coordinate being perturbed:
//! `h = base * max(1, |x_i|)`.

use nalgebra::DMatrix;

/// Base step for first derivatives.
pub const FIRST_STEP: f64 = 1e-5;
/// Base step for second derivatives (roughly the cube root of machine epsilon).
pub const SECOND_STEP: f64 = 6e-4;
/// Base step for the fourth-order stencils used on third derivatives.
pub const THIRD_STEP: f64 = 5e-3;

pub fn scaled_step(base: f64, x: f64) -> f64 {
    base * x.abs().max(1.0)
}

/// Difference stencil: offsets (in units of h) and weights (divided by h).
#[derive(Debug, Clone, Copy)]
pub enum Stencil {
    /// `(f(x+h) - f(x-h)) / 2h`
    Central2,
    /// `(-f(x+2h) + 8f(x+h) - 8f(x-h) + f(x-2h)) / 12h`
    Central4,
}

impl Stencil {
    fn taps(self) -> &'static [(f64, f64)] {
        match self {
            Stencil::Central2 => &[(1.0, 0.5), (-1.0, -0.5)],
            Stencil::Central4 => &[
                (2.0, -1.0 / 12.0),
                (1.0, 8.0 / 12.0),
                (-1.0, -8.0 / 12.0),
                (-2.0, 1.0 / 12.0),
            ],
        }
    }
}

/// Central difference of `f` along coordinate `i` with step `h`.
pub fn partial<F>(f: F, x: &[f64], i: usize, h: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i] += h;
    xm[i] -= h;
    (f(&xp) - f(&xm)) / (2.0 * h)
}

pub fn gradient<F>(f: F, x: &[f64]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    (0..x.len())
        .map(|i| partial(&f, x, i, scaled_step(FIRST_STEP, x[i])))
        .collect()
}

/// Gradient by fourth-order central differences with relative step `base`.
pub fn gradient4<F>(f: F, x: &[f64], base: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    (0..x.len())
        .map(|i| nested_partial(&f, x, &[i], Stencil::Central4, base))
        .collect()
}

/// Hessian by second-order central differences with the second-derivative step.
pub fn hessian<F>(f: F, x: &[f64]) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let n = x.len();
    let f0 = f(x);
    let mut out = DMatrix::zeros(n, n);
    let mut y = x.to_vec();
    for i in 0..n {
        let hi = scaled_step(SECOND_STEP, x[i]);
        y[i] = x[i] + hi;
        let fp = f(&y);
        y[i] = x[i] - hi;
        let fm = f(&y);
        y[i] = x[i];
        out[(i, i)] = (fp - 2.0 * f0 + fm) / (hi * hi);
        for j in 0..i {
            let hj = scaled_step(SECOND_STEP, x[j]);
            let mut acc = 0.0;
            for (si, sj, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                y[i] = x[i] + si * hi;
                y[j] = x[j] + sj * hj;
                acc += w * f(&y);
            }
            y[i] = x[i];
            y[j] = x[j];
            let v = acc / (4.0 * hi * hj);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Mixed partial derivative `∂_{indices[0]} ∂_{indices[1]} ... f` by nesting
/// one-dimensional stencils. `base` is the relative step.
pub fn nested_partial<F>(f: &F, x: &[f64], indices: &[usize], stencil: Stencil, base: f64) -> f64
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let mut y = x.to_vec();
    nested_rec(f, x, &mut y, indices, stencil, base)
}

fn nested_rec<F>(f: &F, x: &[f64], y: &mut [f64], indices: &[usize], stencil: Stencil, base: f64) -> f64
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let Some((&i, rest)) = indices.split_first() else {
        return f(y);
    };
    let h = scaled_step(base, x[i]);
    let saved = y[i];
    let mut acc = 0.0;
    for &(offset, weight) in stencil.taps() {
        y[i] = saved + offset * h;
        acc += weight * nested_rec(f, x, y, rest, stencil, base);
    }
    y[i] = saved;
    acc / h
}

/// Fully symmetric third-derivative tensor, flattened as `[a*n*n + b*n + c]`,
/// from fourth-order nested stencils. Only `a <= b <= c` is evaluated.
pub fn third_derivatives<F>(f: &F, x: &[f64]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let n = x.len();
    let mut out = vec![0.0; n * n * n];
    for a in 0..n {
        for b in a..n {
            for c in b..n {
                let v = nested_partial(f, x, &[a, b, c], Stencil::Central4, THIRD_STEP);
                for (i, j, k) in permutations3(a, b, c) {
                    out[i * n * n + j * n + k] = v;
                }
            }
        }
    }
    out
}

pub(crate) fn permutations3(a: usize, b: usize, c: usize) -> [(usize, usize, usize); 6] {
    [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]
}

/// Central difference of a matrix-valued map along coordinate `k`.
pub fn matrix_partial<F>(f: F, x: &[f64], k: usize, h: f64) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> DMatrix<f64>,
{
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[k] += h;
    xm[k] -= h;
    (f(&xp) - f(&xm)) / (2.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_quadratic() {
        let g = gradient(|x: &[f64]| x[0] * x[0] + 3.0 * x[0] * x[1], &[1.0, 2.0]);
        assert!((g[0] - 8.0).abs() < 1e-8);
        assert!((g[1] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn hessian_of_cubic() {
        let h = hessian(|x: &[f64]| x[0].powi(3) + x[0] * x[1] * x[1], &[1.0, 2.0]);
        assert!((h[(0, 0)] - 6.0).abs() < 1e-5);
        assert!((h[(0, 1)] - 4.0).abs() < 1e-5);
        assert!((h[(1, 1)] - 2.0).abs() < 1e-5);
    }

    #[test]
    fn third_derivatives_of_monomial() {
        // f = x^2 y z
        let f = |x: &[f64]| x[0] * x[0] * x[1] * x[2];
        let t = third_derivatives(&f, &[0.5, 1.5, -2.0]);
        let at = |i: usize, j: usize, k: usize| t[(i * 3 + j) * 3 + k];
        // ∂xxy = 2z, ∂xyz = 2x, ∂xxz = 2y
        assert!((at(0, 0, 1) - (-4.0)).abs() < 1e-8);
        assert!((at(0, 1, 2) - 1.0).abs() < 1e-8);
        assert!((at(2, 0, 0) - 3.0).abs() < 1e-8);
        assert!(at(1, 1, 1).abs() < 1e-8);
    }
}
