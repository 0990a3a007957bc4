//! Frobenius and Novikov algebras.
//!
//! Index dictionary. A [`ProductTensor`] stores `p[i][j][k]`, the `k`-th
//! component of the product of basis vectors `i` and `j`. For a Frobenius
//! algebra built from a potential this is `c^k_ij = g^{kf} Φ_{fij}`. For a
//! Novikov algebra written with upper indices, `e^i e^j = b^{ij}_k e^k`, the
//! same array holds `b^{ij}_k`. The pairing raises and lowers indices.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::geometry::{MetricField, PotentialField, MAX_CONDITION};
use crate::linalg;
use crate::statmanifold::CumulantTensor;

/// Product `e_i ∘ e_j = Σ_k p[i][j][k] e_k`, flattened as `[i*n*n + j*n + k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductTensor {
    dim: usize,
    data: Vec<f64>,
}

impl ProductTensor {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim * dim] }
    }

    pub fn from_data(dim: usize, data: Vec<f64>) -> Result<Self> {
        check_len(dim * dim * dim, data.len())?;
        Ok(Self { dim, data })
    }

    pub fn from_fn<F: Fn(usize, usize, usize) -> f64>(dim: usize, f: F) -> Self {
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    out.set(i, j, k, f(i, j, k));
                }
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.dim + j) * self.dim + k] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn multiply(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n];
        for i in 0..n {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let w = a[i] * b[j];
                if w == 0.0 {
                    continue;
                }
                for (k, o) in out.iter_mut().enumerate() {
                    *o += w * self.get(i, j, k);
                }
            }
        }
        out
    }

    fn basis(&self, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        v[i] = 1.0;
        v
    }

    /// `max |e_i e_j - e_j e_i|`
    pub fn commutativity_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((self.get(i, j, k) - self.get(j, i, k)).abs());
                }
            }
        }
        worst
    }

    /// Largest component of `T(e_i, e_j, e_l)` over basis triples.
    fn max_over_triples<F>(&self, trilinear: F) -> f64
    where
        F: Fn(&[f64], &[f64], &[f64]) -> Vec<f64>,
    {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let v = trilinear(&self.basis(i), &self.basis(j), &self.basis(l));
                    worst = v.iter().fold(worst, |a, x| a.max(x.abs()));
                }
            }
        }
        worst
    }

    /// `max |(ab)c - a(bc)|` over basis triples.
    pub fn associativity_residual(&self) -> f64 {
        self.max_over_triples(|a, b, c| {
            let l = self.multiply(&self.multiply(a, b), c);
            let r = self.multiply(a, &self.multiply(b, c));
            l.iter().zip(&r).map(|(x, y)| x - y).collect()
        })
    }

    /// `max |a(bc) - b(ac)|` (left symmetry).
    pub fn left_symmetry_residual(&self) -> f64 {
        self.max_over_triples(|a, b, c| {
            let l = self.multiply(a, &self.multiply(b, c));
            let r = self.multiply(b, &self.multiply(a, c));
            l.iter().zip(&r).map(|(x, y)| x - y).collect()
        })
    }

    /// `max |(ab)c - a(bc) - (ac)b + a(cb)|`.
    pub fn right_identity_residual(&self) -> f64 {
        self.max_over_triples(|a, b, c| {
            let t1 = self.multiply(&self.multiply(a, b), c);
            let t2 = self.multiply(a, &self.multiply(b, c));
            let t3 = self.multiply(&self.multiply(a, c), b);
            let t4 = self.multiply(a, &self.multiply(c, b));
            (0..self.dim).map(|k| t1[k] - t2[k] - t3[k] + t4[k]).collect()
        })
    }
}

/// A finite-dimensional algebra with a symmetric pairing.
#[derive(Debug, Clone, PartialEq)]
pub struct FrobeniusAlgebra {
    product: ProductTensor,
    pairing: DMatrix<f64>,
    unit: Option<Vec<f64>>,
}

impl FrobeniusAlgebra {
    pub fn new(product: ProductTensor, pairing: DMatrix<f64>) -> Result<Self> {
        let n = product.dim();
        if pairing.nrows() != n || pairing.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: pairing.nrows() });
        }
        let asym = linalg::asymmetry(&pairing);
        if asym > 1e-12 * pairing.amax().max(1.0) {
            return Err(Error::InvalidInput(format!("pairing is not symmetric (residual {asym:e})")));
        }
        Ok(Self { product, pairing, unit: None })
    }

    pub fn with_unit(mut self, unit: Vec<f64>) -> Result<Self> {
        check_len(self.dim(), unit.len())?;
        self.unit = Some(unit);
        Ok(self)
    }

    /// `e_i ∘ e_j = δ_ij e_i` with the identity pairing.
    pub fn diagonal(n: usize) -> Self {
        let product = ProductTensor::from_fn(n, |i, j, k| if i == j && j == k { 1.0 } else { 0.0 });
        Self::new(product, DMatrix::identity(n, n)).expect("valid fixture")
    }

    /// Paracomplex numbers in the basis `{1, e}` with `⟨z, w⟩ = Re(z w)`.
    pub fn paracomplex() -> Self {
        let mut p = ProductTensor::zeros(2);
        p.set(0, 0, 0, 1.0);
        p.set(0, 1, 1, 1.0);
        p.set(1, 0, 1, 1.0);
        p.set(1, 1, 0, 1.0);
        Self::new(p, DMatrix::identity(2, 2)).expect("valid fixture")
    }

    /// Dual numbers `ℝ[t]/t²` in the basis `{1, t}`, paired by the
    /// coefficient of `t` in the product.
    pub fn dual_numbers() -> Self {
        let mut p = ProductTensor::zeros(2);
        p.set(0, 0, 0, 1.0);
        p.set(0, 1, 1, 1.0);
        p.set(1, 0, 1, 1.0);
        Self::new(p, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).expect("valid fixture")
    }

    pub fn zero(n: usize) -> Self {
        Self::new(ProductTensor::zeros(n), DMatrix::identity(n, n)).expect("valid fixture")
    }

    pub fn dim(&self) -> usize {
        self.product.dim()
    }

    pub fn product(&self) -> &ProductTensor {
        &self.product
    }

    pub fn product_mut(&mut self) -> &mut ProductTensor {
        &mut self.product
    }

    pub fn pairing(&self) -> &DMatrix<f64> {
        &self.pairing
    }

    pub fn declared_unit(&self) -> Option<&[f64]> {
        self.unit.as_deref()
    }

    pub fn multiply(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        self.product.multiply(a, b)
    }

    pub fn pair(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += a[i] * self.pairing[(i, j)] * b[j];
            }
        }
        acc
    }

    /// `max |⟨e_i ∘ e_j, e_k⟩ - ⟨e_i, e_j ∘ e_k⟩|`
    pub fn pairing_invariance_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut l = 0.0;
                    let mut r = 0.0;
                    for m in 0..n {
                        l += self.product.get(i, j, m) * self.pairing[(m, k)];
                        r += self.pairing[(i, m)] * self.product.get(j, k, m);
                    }
                    worst = worst.max((l - r).abs());
                }
            }
        }
        worst
    }

    /// Least-squares two-sided unit and its residual
    /// `max |u∘e_j - e_j|, |e_j∘u - e_j|`.
    pub fn find_unit(&self) -> (Vec<f64>, f64) {
        let n = self.dim();
        let mut a = DMatrix::zeros(2 * n * n, n);
        let mut rhs = DVector::zeros(2 * n * n);
        for j in 0..n {
            for k in 0..n {
                let row = j * n + k;
                let target = if j == k { 1.0 } else { 0.0 };
                for i in 0..n {
                    a[(row, i)] = self.product.get(i, j, k);
                    a[(n * n + row, i)] = self.product.get(j, i, k);
                }
                rhs[row] = target;
                rhs[n * n + row] = target;
            }
        }
        let svd = a.clone().svd(true, true);
        let u = svd.solve(&rhs, 1e-12).unwrap_or_else(|_| DVector::zeros(n));
        let residual = (&a * &u - &rhs).amax();
        (u.iter().copied().collect(), residual)
    }

    pub fn unit_residual(&self, u: &[f64]) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let e = self.product.basis(j);
            let left = self.multiply(u, &e);
            let right = self.multiply(&e, u);
            for k in 0..n {
                worst = worst.max((left[k] - e[k]).abs()).max((right[k] - e[k]).abs());
            }
        }
        worst
    }

    pub fn axioms(&self) -> AxiomResiduals {
        let eig = linalg::symmetric_eigenvalues(&self.pairing);
        let min_eig = eig.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
        let (unit, unit_residual) = match &self.unit {
            Some(u) => (Some(u.clone()), Some(self.unit_residual(u))),
            None => {
                let (u, r) = self.find_unit();
                if r <= UNIT_TOLERANCE {
                    let r = self.unit_residual(&u);
                    (Some(u), Some(r))
                } else {
                    (None, None)
                }
            }
        };
        AxiomResiduals {
            commutativity: self.product.commutativity_residual(),
            associativity: self.product.associativity_residual(),
            pairing_invariance: self.pairing_invariance_residual(),
            pairing_min_abs_eigenvalue: min_eig,
            unit,
            unit_residual,
        }
    }
}

const UNIT_TOLERANCE: f64 = 1e-8;

/// Residuals of the Frobenius algebra axioms. Reported, never raised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomResiduals {
    pub commutativity: f64,
    pub associativity: f64,
    pub pairing_invariance: f64,
    /// Smallest `|λ|` of the pairing; zero means degenerate.
    pub pairing_min_abs_eigenvalue: f64,
    pub unit: Option<Vec<f64>>,
    pub unit_residual: Option<f64>,
}

impl AxiomResiduals {
    /// Largest of the identity residuals (commutativity, associativity,
    /// invariance and unit when present).
    pub fn max_identity_residual(&self) -> f64 {
        [self.commutativity, self.associativity, self.pairing_invariance, self.unit_residual.unwrap_or(0.0)]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn frobenius_axioms(alg: &FrobeniusAlgebra) -> AxiomResiduals {
    alg.axioms()
}

/// `c^k_ij = g^{kf} Φ_{fij}` with pairing `g`. The identity
/// `Φ(u, v, w) = ⟨u ∘ v, w⟩` then holds by construction.
pub fn algebra_from_potential(phi3: &CumulantTensor, g: &DMatrix<f64>) -> Result<FrobeniusAlgebra> {
    if phi3.order() != 3 {
        return Err(Error::InvalidInput(format!("expected an order-3 tensor, got order {}", phi3.order())));
    }
    let n = phi3.dim();
    check_len(n, g.nrows())?;
    let ginv = linalg::checked_inverse(g, MAX_CONDITION)?;
    let product = ProductTensor::from_fn(n, |i, j, k| (0..n).map(|f| ginv[(k, f)] * phi3.get(&[f, i, j])).sum());
    FrobeniusAlgebra::new(product, g.clone())
}

/// Algebra of a potential at `x`: third derivatives contracted with `g(x)⁻¹`.
pub fn algebra_at(potential: &PotentialField, metric: &MetricField, x: &[f64]) -> Result<FrobeniusAlgebra> {
    let n = potential.dim();
    let t = potential.third_derivatives(x)?;
    let phi3 = CumulantTensor::from_data(n, 3, t)?;
    algebra_from_potential(&phi3, &metric.value(x)?)
}

/// `Φ = ½x₁²x₃ + ½x₁x₂² + c·x₂²x₃²` with analytic third derivatives. For
/// `c = 0` this is the trivial three-dimensional Frobenius potential with
/// flat metric [`antidiagonal_metric`].
pub fn cubic_potential3(c: f64) -> PotentialField {
    PotentialField::new(3, move |x| {
        0.5 * x[0] * x[0] * x[2] + 0.5 * x[0] * x[1] * x[1] + c * x[1] * x[1] * x[2] * x[2]
    })
    .with_gradient(move |x| {
        vec![
            x[0] * x[2] + 0.5 * x[1] * x[1],
            x[0] * x[1] + 2.0 * c * x[1] * x[2] * x[2],
            0.5 * x[0] * x[0] + 2.0 * c * x[1] * x[1] * x[2],
        ]
    })
    .with_hessian(move |x| {
        DMatrix::from_row_slice(
            3,
            3,
            &[
                x[2],
                x[1],
                x[0],
                x[1],
                x[0] + 2.0 * c * x[2] * x[2],
                4.0 * c * x[1] * x[2],
                x[0],
                4.0 * c * x[1] * x[2],
                2.0 * c * x[1] * x[1],
            ],
        )
    })
    .with_third(move |x| {
        let mut t = vec![0.0; 27];
        let mut put = |a: usize, b: usize, d: usize, v: f64| {
            for (i, j, k) in crate::fd::permutations3(a, b, d) {
                t[(i * 3 + j) * 3 + k] = v;
            }
        };
        put(0, 0, 2, 1.0);
        put(0, 1, 1, 1.0);
        put(1, 1, 2, 4.0 * c * x[2]);
        put(1, 2, 2, 4.0 * c * x[1]);
        t
    })
}

/// Constant metric with ones on the antidiagonal.
pub fn antidiagonal_metric(n: usize) -> MetricField {
    MetricField::constant(DMatrix::from_fn(n, n, |i, j| if i + j + 1 == n { 1.0 } else { 0.0 }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WdvvResidual {
    /// `max |Σ Φ_abe g^ef Φ_fcd - Σ Φ_bce g^ef Φ_fad|` over all `(a,b,c,d)`.
    pub max_abs: f64,
    /// `max_abs / (max|Φ₃|² · max|g⁻¹|)`, or `max_abs` when that scale is zero.
    pub relative: f64,
    pub scale: f64,
    pub point: Vec<f64>,
}

/// WDVV residual of a potential at `x` (even case: the sign factor is `+1`).
pub fn wdvv_residual(potential: &PotentialField, metric: &MetricField, x: &[f64]) -> Result<WdvvResidual> {
    let n = potential.dim();
    check_len(n, metric.dim())?;
    let t = potential.third_derivatives(x)?;
    let ginv = metric.inverse(x)?;
    let phi = |a: usize, b: usize, c: usize| t[(a * n + b) * n + c];
    // m[a][b][c][d] = Σ_ef Φ_abe g^ef Φ_fcd
    let mut contracted = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut acc = 0.0;
                    for e in 0..n {
                        for f in 0..n {
                            acc += phi(a, b, e) * ginv[(e, f)] * phi(f, c, d);
                        }
                    }
                    contracted[((a * n + b) * n + c) * n + d] = acc;
                }
            }
        }
    }
    let m = |a: usize, b: usize, c: usize, d: usize| contracted[((a * n + b) * n + c) * n + d];
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    worst = worst.max((m(a, b, c, d) - m(b, c, a, d)).abs());
                }
            }
        }
    }
    let tmax = t.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let scale = tmax * tmax * ginv.amax();
    let relative = if scale > 0.0 { worst / scale } else { worst };
    Ok(WdvvResidual { max_abs: worst, relative, scale, point: x.to_vec() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NovikovResiduals {
    /// `max |a(bc) - b(ac)|`
    pub left_symmetry: f64,
    /// `max |(ab)c - a(bc) - (ac)b + a(cb)|`
    pub right_identity: f64,
    /// `max |b^{ij}_k + b^{ji}_k - ∂g^{ij}/∂u^k|`
    pub symmetrization: f64,
}

/// Novikov identities of `b` and its compatibility with the contravariant
/// metric `g^{ij}(u)`.
pub fn novikov_residuals(b: &ProductTensor, g: &MetricField, u: &[f64]) -> Result<NovikovResiduals> {
    let n = b.dim();
    check_len(n, g.dim())?;
    check_len(n, u.len())?;
    let dg = g.partials(u)?;
    let mut sym: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                sym = sym.max((b.get(i, j, k) + b.get(j, i, k) - dg[k][(i, j)]).abs());
            }
        }
    }
    Ok(NovikovResiduals {
        left_symmetry: b.left_symmetry_residual(),
        right_identity: b.right_identity_residual(),
        symmetrization: sym,
    })
}

/// Real idempotents `a ∘ a = a` of a two-dimensional algebra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Idempotents {
    /// Isolated solutions, including `0`.
    pub points: Vec<[f64; 2]>,
    /// When `a ∘ a = ℓ(a) a` identically with `ℓ ≠ 0`, every point of the
    /// line `ℓ(a) = 1` is idempotent; `ℓ` is returned here.
    pub line: Option<[f64; 2]>,
}

impl Idempotents {
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        self.points.iter().any(|q| (q[0] - p[0]).abs() <= tol && (q[1] - p[1]).abs() <= tol)
    }
}

/// All real solutions of `a ∘ a = a` for a 2-dimensional algebra.
///
/// A nonzero idempotent is `v/λ` for a direction `v` with `v ∘ v = λ v`,
/// `λ ≠ 0`. Such directions are the roots of the binary cubic
/// `(v∘v)_0 v_1 - (v∘v)_1 v_0`; each candidate is polished by Newton steps
/// and kept only if its residual is at most `1e-10`.
pub fn find_idempotents_rank2(alg: &FrobeniusAlgebra) -> Result<Idempotents> {
    let p = alg.product();
    check_len(2, p.dim())?;
    let q = |k: usize| {
        (
            p.get(0, 0, k),
            p.get(0, 1, k) + p.get(1, 0, k),
            p.get(1, 1, k),
        )
    };
    let (a0, b0, c0) = q(0);
    let (a1, b1, c1) = q(1);
    let square = |v: [f64; 2]| -> [f64; 2] {
        let s = p.multiply(&v, &v);
        [s[0], s[1]]
    };
    // cubic in s for v = (1, s): -a1 + (a0 - b1)s + (b0 - c1)s² + c0 s³
    let coeffs = [-a1, a0 - b1, b0 - c1, c0];
    let scale = p.max_abs();
    let mut out = Idempotents { points: vec![[0.0, 0.0]], line: None };
    if scale == 0.0 {
        return Ok(out);
    }
    let negligible = |c: f64| c.abs() <= 1e-12 * scale;
    if coeffs.iter().all(|&c| negligible(c)) {
        // v∘v = ℓ(v) v with ℓ(v) = a0 x + b0 y
        if !(negligible(a0) && negligible(b0)) {
            out.line = Some([a0, b0]);
        }
        return Ok(out);
    }
    let mut directions: Vec<[f64; 2]> = linalg::real_poly_roots(&coeffs)
        .unwrap_or_default()
        .into_iter()
        .map(|s| [1.0, s])
        .collect();
    if negligible(c0) {
        directions.push([0.0, 1.0]);
    }
    for v in directions {
        let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
        let v = [v[0] / norm, v[1] / norm];
        let sv = square(v);
        let lambda = sv[0] * v[0] + sv[1] * v[1];
        if lambda.abs() <= 1e-12 * scale {
            continue;
        }
        let mut a = [v[0] / lambda, v[1] / lambda];
        polish_idempotent(p, &mut a);
        let s = square(a);
        let residual = (s[0] - a[0]).abs().max((s[1] - a[1]).abs());
        if residual <= 1e-10 && !out.contains(a, 1e-8) {
            out.points.push(a);
        }
    }
    out.points.sort_by(|x, y| x[0].total_cmp(&y[0]).then(x[1].total_cmp(&y[1])));
    Ok(out)
}

fn polish_idempotent(p: &ProductTensor, a: &mut [f64; 2]) {
    for _ in 0..20 {
        let s = p.multiply(&a[..], &a[..]);
        let f = [s[0] - a[0], s[1] - a[1]];
        if f[0].abs().max(f[1].abs()) < 1e-15 {
            return;
        }
        // J_kj = ∂(a∘a)_k/∂a_j - δ_kj
        let mut jac = DMatrix::zeros(2, 2);
        for k in 0..2 {
            for j in 0..2 {
                let mut v = -if k == j { 1.0 } else { 0.0 };
                for i in 0..2 {
                    v += a[i] * (p.get(i, j, k) + p.get(j, i, k));
                }
                jac[(k, j)] = v;
            }
        }
        let Some(step) = linalg::solve(&jac, &DVector::from_column_slice(&f)) else {
            return;
        };
        if !step.iter().all(|v| v.is_finite()) {
            return;
        }
        a[0] -= step[0];
        a[1] -= step[1];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_cubic_potential_satisfies_wdvv() {
        let g = antidiagonal_metric(3);
        for x in [[0.0, 0.0, 0.0], [0.3, -1.2, 2.0], [0.0, 1.0, 1.0]] {
            let r = wdvv_residual(&cubic_potential3(0.0), &g, &x).unwrap();
            assert!(r.relative < 1e-8, "{r:?}");
        }
    }

    #[test]
    fn perturbed_cubic_potential_violates_wdvv() {
        let r = wdvv_residual(&cubic_potential3(0.1), &antidiagonal_metric(3), &[0.0, 1.0, 1.0]).unwrap();
        assert!(r.relative > 1e-2, "{r:?}");
    }

    #[test]
    fn finite_difference_third_derivatives_agree() {
        let analytic = cubic_potential3(0.1);
        let fd = PotentialField::new(3, move |x| analytic.eval_unchecked(x));
        let x = [0.2, 0.7, -0.4];
        let a = cubic_potential3(0.1).third_derivatives(&x).unwrap();
        let b = fd.third_derivatives(&x).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-6, "{u} vs {v}");
        }
    }

    #[test]
    fn first_basis_vector_is_unit_of_cubic_potential_algebra() {
        let alg = algebra_at(&cubic_potential3(0.0), &antidiagonal_metric(3), &[0.4, 0.1, -0.3]).unwrap();
        let r = alg.axioms();
        let u = r.unit.clone().unwrap();
        assert!((u[0] - 1.0).abs() < 1e-12 && u[1].abs() < 1e-12 && u[2].abs() < 1e-12);
        assert!(r.max_identity_residual() < 1e-12);
    }

    #[test]
    fn diagonal_algebra_axioms() {
        let r = FrobeniusAlgebra::diagonal(3).axioms();
        assert_eq!(r.commutativity, 0.0);
        assert_eq!(r.associativity, 0.0);
        assert_eq!(r.pairing_invariance, 0.0);
        assert_eq!(r.pairing_min_abs_eigenvalue, 1.0);
        let u = r.unit.unwrap();
        for v in u {
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert!(r.unit_residual.unwrap() < 1e-12);
    }

    #[test]
    fn paracomplex_algebra_axioms() {
        let r = FrobeniusAlgebra::paracomplex().axioms();
        assert_eq!(r.max_identity_residual(), r.unit_residual.unwrap());
        assert!(r.max_identity_residual() < 1e-12);
        let u = r.unit.unwrap();
        assert!((u[0] - 1.0).abs() < 1e-12 && u[1].abs() < 1e-12);
    }

    #[test]
    fn perturbed_diagonal_algebra_is_not_associative() {
        let mut alg = FrobeniusAlgebra::diagonal(3);
        // (e_1 ∘ e_2)^1 perturbed
        alg.product_mut().set(0, 1, 0, 0.1);
        assert!(alg.axioms().associativity >= 0.01);
    }

    #[test]
    fn zero_potential_gives_zero_algebra() {
        let t = CumulantTensor::from_fn(3, 3, |_| 0.0);
        let alg = algebra_from_potential(&t, &DMatrix::identity(3, 3)).unwrap();
        assert_eq!(alg.product().max_abs(), 0.0);
    }

    #[test]
    fn degenerate_pairing_rejected() {
        let t = CumulantTensor::from_fn(2, 3, |_| 1.0);
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(algebra_from_potential(&t, &g), Err(Error::DegenerateMetric { .. })));
    }

    #[test]
    fn idempotents_of_paracomplex_numbers() {
        let id = find_idempotents_rank2(&FrobeniusAlgebra::paracomplex()).unwrap();
        assert_eq!(id.points.len(), 4);
        for p in [[0.0, 0.0], [1.0, 0.0], [0.5, 0.5], [0.5, -0.5]] {
            assert!(id.contains(p, 1e-12), "{p:?} missing from {id:?}");
        }
        assert!(id.line.is_none());
    }

    #[test]
    fn idempotents_of_dual_numbers() {
        let id = find_idempotents_rank2(&FrobeniusAlgebra::dual_numbers()).unwrap();
        assert_eq!(id.points.len(), 2);
        assert!(id.contains([0.0, 0.0], 0.0) && id.contains([1.0, 0.0], 1e-12));
    }

    #[test]
    fn idempotents_of_zero_algebra() {
        let id = find_idempotents_rank2(&FrobeniusAlgebra::zero(2)).unwrap();
        assert_eq!(id.points, vec![[0.0, 0.0]]);
    }

    #[test]
    fn line_of_idempotents() {
        // a∘b = ½(ℓ(a) b + ℓ(b) a) with ℓ = first coordinate
        let p = ProductTensor::from_fn(2, |i, j, k| {
            0.5 * (if i == 0 && j == k { 1.0 } else { 0.0 } + if j == 0 && i == k { 1.0 } else { 0.0 })
        });
        let alg = FrobeniusAlgebra::new(p, DMatrix::identity(2, 2)).unwrap();
        let id = find_idempotents_rank2(&alg).unwrap();
        assert_eq!(id.line, Some([1.0, 0.0]));
    }

    #[test]
    fn novikov_identities_of_associative_commutative_algebra() {
        let b = FrobeniusAlgebra::diagonal(2).product().clone();
        let g = MetricField::new(2, |u| DMatrix::from_row_slice(2, 2, &[u[0], 0.0, 0.0, u[1]]));
        let r = novikov_residuals(&b, &g, &[1.0, 2.0]).unwrap();
        assert_eq!(r.left_symmetry, 0.0);
        assert_eq!(r.right_identity, 0.0);
    }
}
