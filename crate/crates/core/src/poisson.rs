//! Poisson brackets: canonical, spin-extended, paracomplex, the first-order
//! local Lie bracket and a lattice discretization of the hydrodynamic-type
//! bracket.
//!
//! Sign convention: `{A, B} = ∂A/∂p_μ ∂B/∂z^μ - ∂B/∂p_μ ∂A/∂z^μ`, so that
//! `{z, p} = -1` and `dQ/ds = {H, Q}`.
//!
//! Phase-space points are flat slices laid out as `(z, p, Λ)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::fd;
use crate::frobenius::ProductTensor;
use crate::paracomplex::{hermitian_product, ParaNumber, ParaVector};

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradientFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Relative step of the fourth-order stencil used for observable gradients.
pub const OBSERVABLE_STEP: f64 = 1e-3;

/// A smooth function on phase space with an optional analytic gradient.
#[derive(Clone)]
pub struct Observable {
    value: ScalarFn,
    gradient: Option<GradientFn>,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable").field("analytic_gradient", &self.gradient.is_some()).finish()
    }
}

impl Observable {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self { value: Arc::new(f), gradient: None }
    }

    pub fn with_gradient<G>(mut self, g: G) -> Self
    where
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c).with_gradient(|y| vec![0.0; y.len()])
    }

    /// The `i`-th coordinate of the flat point.
    pub fn coordinate(i: usize) -> Self {
        Self::new(move |y| y[i]).with_gradient(move |y| {
            let mut g = vec![0.0; y.len()];
            g[i] = 1.0;
            g
        })
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        (self.value)(y)
    }

    pub fn gradient(&self, y: &[f64]) -> Vec<f64> {
        match &self.gradient {
            Some(g) => g(y),
            None => fd::gradient4(|x| (self.value)(x), y, OBSERVABLE_STEP),
        }
    }

    /// `f ∘ A`, with gradient `f'(A) ∇A`.
    pub fn compose<F, D>(&self, f: F, df: D) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let (a, b) = (self.clone(), self.clone());
        Self::new(move |y| f(a.eval(y))).with_gradient(move |y| {
            let s = df(b.eval(y));
            b.gradient(y).into_iter().map(|g| s * g).collect()
        })
    }

    /// Pointwise product, with the product-rule gradient.
    pub fn product(&self, other: &Self) -> Self {
        let (a, b) = (self.clone(), other.clone());
        let (a2, b2) = (self.clone(), other.clone());
        Self::new(move |y| a.eval(y) * b.eval(y)).with_gradient(move |y| {
            let (va, vb) = (a2.eval(y), b2.eval(y));
            a2.gradient(y).iter().zip(b2.gradient(y)).map(|(ga, gb)| ga * vb + va * gb).collect()
        })
    }

    pub fn sum(&self, other: &Self) -> Self {
        let (a, b) = (self.clone(), other.clone());
        let (a2, b2) = (self.clone(), other.clone());
        Self::new(move |y| a.eval(y) + b.eval(y))
            .with_gradient(move |y| a2.gradient(y).iter().zip(b2.gradient(y)).map(|(x, z)| x + z).collect())
    }
}

/// Lie-algebra structure constants `γ^k_ij`, flattened as `[k*m*m + i*m + j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureConstants {
    dim: usize,
    data: Vec<f64>,
}

impl StructureConstants {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        check_len(dim * dim * dim, data.len())?;
        let out = Self { dim, data };
        let residual = out.antisymmetry_residual();
        if residual > 1e-12 {
            return Err(Error::NotAntisymmetric { residual });
        }
        Ok(out)
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim * dim] }
    }

    /// `γ^k_ij = ε_ijk`.
    pub fn so3() -> Self {
        let mut out = Self::zero(3);
        for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            out.set_pair(k, i, j, 1.0);
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    /// Sets `γ^k_ij = v` and `γ^k_ji = -v`.
    pub fn set_pair(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let m = self.dim;
        self.data[(k * m + i) * m + j] = v;
        self.data[(k * m + j) * m + i] = -v;
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        let m = self.dim;
        let mut worst: f64 = 0.0;
        for k in 0..m {
            for i in 0..m {
                for j in 0..m {
                    worst = worst.max((self.get(k, i, j) + self.get(k, j, i)).abs());
                }
            }
        }
        worst
    }

    /// `max |Σ_l γ^l_ij γ^s_lk + γ^l_jk γ^s_li + γ^l_ki γ^s_lj|`.
    pub fn jacobi_residual(&self) -> f64 {
        let m = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for s in 0..m {
                        let acc: f64 = (0..m)
                            .map(|l| {
                                self.get(l, i, j) * self.get(s, l, k)
                                    + self.get(l, j, k) * self.get(s, l, i)
                                    + self.get(l, k, i) * self.get(s, l, j)
                            })
                            .sum();
                        worst = worst.max(acc.abs());
                    }
                }
            }
        }
        worst
    }
}

/// A bracket on functions of the flat phase-space point.
#[derive(Debug, Clone)]
pub enum Bracket {
    /// `n` positions followed by `n` momenta.
    Canonical { n: usize },
    /// Canonical part on `(z, p)` plus the spin term on the trailing `Λ` block.
    Extended { n: usize, gamma: StructureConstants },
}

impl Bracket {
    pub fn phase_dim(&self) -> usize {
        match self {
            Bracket::Canonical { n } => 2 * n,
            Bracket::Extended { n, gamma } => 2 * n + gamma.dim(),
        }
    }

    pub fn eval(&self, a: &Observable, b: &Observable, y: &[f64]) -> Result<f64> {
        check_len(self.phase_dim(), y.len())?;
        let ga = a.gradient(y);
        let gb = b.gradient(y);
        Ok(self.eval_gradients(&ga, &gb, y))
    }

    fn eval_gradients(&self, ga: &[f64], gb: &[f64], y: &[f64]) -> f64 {
        match self {
            Bracket::Canonical { n } => canonical_part(*n, ga, gb),
            Bracket::Extended { n, gamma } => {
                let m = gamma.dim();
                let off = 2 * n;
                let mut spin = 0.0;
                for k in 0..m {
                    for i in 0..m {
                        for j in 0..m {
                            let c = gamma.get(k, i, j);
                            if c != 0.0 {
                                spin -= y[off + k] * c * ga[off + i] * gb[off + j];
                            }
                        }
                    }
                }
                canonical_part(*n, ga, gb) + spin
            }
        }
    }

    /// `{A, B}` as an observable (gradient by finite differences).
    pub fn observable(&self, a: &Observable, b: &Observable) -> Observable {
        let (br, a, b) = (self.clone(), a.clone(), b.clone());
        Observable::new(move |y| {
            let ga = a.gradient(y);
            let gb = b.gradient(y);
            br.eval_gradients(&ga, &gb, y)
        })
    }
}

fn canonical_part(n: usize, ga: &[f64], gb: &[f64]) -> f64 {
    (0..n).map(|mu| ga[n + mu] * gb[mu] - gb[n + mu] * ga[mu]).sum()
}

pub fn canonical_bracket(a: &Observable, b: &Observable, y: &[f64]) -> Result<f64> {
    if y.len() % 2 != 0 {
        return Err(Error::InvalidInput("canonical phase space has even dimension".into()));
    }
    Bracket::Canonical { n: y.len() / 2 }.eval(a, b, y)
}

/// Canonical bracket on `(z, p)` plus `-Λ_k γ^k_ij ∂A/∂Λ_i ∂B/∂Λ_j`.
pub fn extended_bracket(a: &Observable, b: &Observable, y: &[f64], gamma: &StructureConstants) -> Result<f64> {
    let m = gamma.dim();
    if y.len() < m || (y.len() - m) % 2 != 0 {
        return Err(Error::DimensionMismatch { expected: m, found: y.len() });
    }
    Bracket::Extended { n: (y.len() - m) / 2, gamma: gamma.clone() }.eval(a, b, y)
}

/// `dQ/ds = {H, Q}` under the canonical bracket.
pub fn evolution_derivative(h: &Observable, q: &Observable, y: &[f64]) -> Result<f64> {
    canonical_bracket(h, q, y)
}

/// `½ Im⟨ξ, η⟩` for the para-Hermitian product defined by `g`.
///
/// With `ξ = x + ey`, `η = u + ev` this is `½ Σ g_jk (y^j u^k - x^k v^j)`.
/// The two sums pair term by term under `ξ ↔ η`, so for symmetric `g` the
/// result is antisymmetric bit for bit and `{ξ, ξ} = 0` exactly.
pub fn paracomplex_bracket(g: &DMatrix<f64>, xi: &ParaVector, eta: &ParaVector) -> Result<f64> {
    let n = xi.len();
    check_len(n, eta.len())?;
    check_len(n, g.nrows())?;
    check_len(n, g.ncols())?;
    let (a, b) = (xi.components(), eta.components());
    let (mut plus, mut minus) = (0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            plus += g[(j, k)] * (a[j].im * b[k].re);
            minus += g[(k, j)] * (a[k].re * b[j].im);
        }
    }
    Ok(0.5 * (plus - minus))
}

/// The same bracket through `(e/2)·(⟨ξ,η⟩ - conj⟨ξ,η⟩)/2`, whose value is
/// real; returns that paracomplex number.
pub fn paracomplex_bracket_via_conjugate(g: &DMatrix<f64>, xi: &ParaVector, eta: &ParaVector) -> Result<ParaNumber> {
    let w = hermitian_product(g, xi, eta)?;
    Ok(ParaNumber::E.scale(0.5) * (w - w.conj()).scale(0.5))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketResiduals {
    /// `max |{A,B} + {B,A}|`
    pub antisymmetry: f64,
    /// `max |{A², sin B} - 2A cos B {A,B}|`
    pub chain_rule: f64,
    /// `max |{AB, C} - A{B,C} - B{A,C}|`
    pub leibniz: f64,
    /// `max |{A,{B,C}} + {B,{C,A}} + {C,{A,B}}|`
    pub jacobi: f64,
}

impl BracketResiduals {
    pub fn max(&self) -> f64 {
        self.antisymmetry.max(self.chain_rule).max(self.leibniz).max(self.jacobi)
    }
}

pub fn bracket_property_residuals(
    bracket: &Bracket,
    observables: [&Observable; 3],
    samples: &[Vec<f64>],
) -> Result<BracketResiduals> {
    let [a, b, c] = observables;
    let a2 = a.compose(|t| t * t, |t| 2.0 * t);
    let sin_b = b.compose(f64::sin, f64::cos);
    let ab = a.product(b);
    let bc = bracket.observable(b, c);
    let ca = bracket.observable(c, a);
    let abr = bracket.observable(a, b);
    let mut out = BracketResiduals { antisymmetry: 0.0, chain_rule: 0.0, leibniz: 0.0, jacobi: 0.0 };
    for y in samples {
        let ab_v = bracket.eval(a, b, y)?;
        out.antisymmetry = out.antisymmetry.max((ab_v + bracket.eval(b, a, y)?).abs());
        let chain = bracket.eval(&a2, &sin_b, y)? - 2.0 * a.eval(y) * b.eval(y).cos() * ab_v;
        out.chain_rule = out.chain_rule.max(chain.abs());
        let leib = bracket.eval(&ab, c, y)? - a.eval(y) * bracket.eval(b, c, y)? - b.eval(y) * bracket.eval(a, c, y)?;
        out.leibniz = out.leibniz.max(leib.abs());
        let jac = bracket.eval(a, &bc, y)? + bracket.eval(b, &ca, y)? + bracket.eval(c, &abr, y)?;
        out.jacobi = out.jacobi.max(jac.abs());
    }
    Ok(out)
}

/// Values of an `r`-component field on a periodic grid, indexed `[component][site]`.
pub type GridField = Vec<Vec<f64>>;

/// Periodic central difference `(f_{n+1} - f_{n-1}) / 2h`.
pub fn central_difference(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    (0..n).map(|i| (f[(i + 1) % n] - f[(i + n - 1) % n]) / (2.0 * h)).collect()
}

/// `D_{nm} = (δ_{m,n+1} - δ_{m,n-1}) / 2h` on `n` periodic sites.
pub fn difference_matrix(n: usize, h: f64) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        d[(i, (i + 1) % n)] += 1.0 / (2.0 * h);
        d[(i, (i + n - 1) % n)] -= 1.0 / (2.0 * h);
    }
    d
}

fn check_field(field: &GridField, r: usize) -> Result<usize> {
    check_len(r, field.len())?;
    let n = field.first().map_or(0, Vec::len);
    for comp in field {
        check_len(n, comp.len())?;
    }
    Ok(n)
}

/// `[p, q]_k = b^{ij}_k (p_i q_j' - q_i p_j')` with `b.get(i, j, k) = b^{ij}_k`.
pub fn local_lie_bracket(b: &ProductTensor, p: &GridField, q: &GridField, h: f64) -> Result<GridField> {
    let r = b.dim();
    let n = check_field(p, r)?;
    check_len(n, check_field(q, r)?)?;
    let dp: Vec<Vec<f64>> = p.iter().map(|f| central_difference(f, h)).collect();
    let dq: Vec<Vec<f64>> = q.iter().map(|f| central_difference(f, h)).collect();
    let mut out = vec![vec![0.0; n]; r];
    for (k, row) in out.iter_mut().enumerate() {
        for i in 0..r {
            for j in 0..r {
                let c = b.get(i, j, k);
                if c == 0.0 {
                    continue;
                }
                for s in 0..n {
                    row[s] += c * (p[i][s] * dq[j][s] - q[i][s] * dp[j][s]);
                }
            }
        }
    }
    Ok(out)
}

type FieldMetricFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Hydrodynamic-type bracket on `sites` periodic points of `[0, 1)`.
#[derive(Clone)]
pub struct LatticeBracket {
    sites: usize,
    components: usize,
    metric: FieldMetricFn,
    b: ProductTensor,
}

impl fmt::Debug for LatticeBracket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LatticeBracket")
            .field("sites", &self.sites)
            .field("components", &self.components)
            .field("b", &self.b)
            .finish()
    }
}

impl LatticeBracket {
    pub fn new<G>(sites: usize, metric: G, b: ProductTensor) -> Result<Self>
    where
        G: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        if sites < 4 {
            return Err(Error::InvalidInput(format!("lattice needs at least 4 sites, got {sites}")));
        }
        Ok(Self { sites, components: b.dim(), metric: Arc::new(metric), b })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.sites as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.sites).map(|s| s as f64 * self.spacing()).collect()
    }

    /// `B[(i,n),(j,m)] = g^{ij}(u_n) D_{nm} + b^{ij}_k (Du^k)_n δ_{nm}`,
    /// row index `i * sites + n`.
    pub fn assemble(&self, u: &GridField) -> Result<DMatrix<f64>> {
        let (r, n) = (self.components, self.sites);
        check_len(n, check_field(u, r)?)?;
        let h = self.spacing();
        let du: Vec<Vec<f64>> = u.iter().map(|f| central_difference(f, h)).collect();
        let mut out = DMatrix::zeros(r * n, r * n);
        let mut point = vec![0.0; r];
        for s in 0..n {
            for (c, v) in point.iter_mut().enumerate() {
                *v = u[c][s];
            }
            let g = (self.metric)(&point);
            check_len(r, g.nrows())?;
            for i in 0..r {
                for j in 0..r {
                    out[(i * n + s, j * n + (s + 1) % n)] += g[(i, j)] / (2.0 * h);
                    out[(i * n + s, j * n + (s + n - 1) % n)] -= g[(i, j)] / (2.0 * h);
                    let local: f64 = (0..r).map(|k| self.b.get(i, j, k) * du[k][s]).sum();
                    out[(i * n + s, j * n + s)] += local;
                }
            }
        }
        Ok(out)
    }

    /// `{F, G} = h φᵀ B(u) ψ` for `F = h Σ φ·u`, `G = h Σ ψ·u`.
    pub fn linear_bracket(&self, u: &GridField, phi: &[f64], psi: &[f64]) -> Result<f64> {
        let b = self.assemble(u)?;
        let v = &b * DVector::from_column_slice(psi);
        Ok(self.spacing() * DVector::from_column_slice(phi).dot(&v))
    }

    /// Residual checks at state `u`, using the supplied flattened test
    /// covectors (length `components * sites`).
    pub fn check(&self, u: &GridField, tests: [&[f64]; 3]) -> Result<LatticeResiduals> {
        let (r, n) = (self.components, self.sites);
        for t in tests {
            check_len(r * n, t.len())?;
        }
        let b = self.assemble(u)?;
        let skew = &b + b.transpose();
        let h = self.spacing();
        let [phi, psi, chi] = tests.map(DVector::from_column_slice);
        let weak = h * (phi.dot(&(&skew * &psi)).abs().max(psi.dot(&(&skew * &chi)).abs()).max(chi.dot(&(&skew * &phi)).abs()));
        let jacobi = self.jacobi(u, &phi, &psi, &chi)?;
        let scale = h * phi.amax() * psi.amax() * chi.amax();
        Ok(LatticeResiduals { antisymmetry_max: skew.amax(), weak_antisymmetry: weak, jacobi, jacobi_scale: scale })
    }

    /// `{F,{G,K}} + {G,{K,F}} + {K,{F,G}}` for linear functionals. The inner
    /// bracket `W(u)` is differentiated by central differences over `u`, and
    /// `{F, W} = φᵀ B ∇_u W`.
    fn jacobi(&self, u: &GridField, phi: &DVector<f64>, psi: &DVector<f64>, chi: &DVector<f64>) -> Result<f64> {
        let (r, n) = (self.components, self.sites);
        let b = self.assemble(u)?;
        let mut total = 0.0;
        for (outer, x, y) in [(phi, psi, chi), (psi, chi, phi), (chi, phi, psi)] {
            let mut grad = DVector::zeros(r * n);
            let mut w = u.clone();
            for c in 0..r {
                for s in 0..n {
                    let base = u[c][s];
                    let step = fd::scaled_step(fd::FIRST_STEP, base);
                    w[c][s] = base + step;
                    let plus = self.linear_bracket(&w, x.as_slice(), y.as_slice())?;
                    w[c][s] = base - step;
                    let minus = self.linear_bracket(&w, x.as_slice(), y.as_slice())?;
                    w[c][s] = base;
                    grad[c * n + s] = (plus - minus) / (2.0 * step);
                }
            }
            total += outer.dot(&(&b * grad));
        }
        Ok(total.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeResiduals {
    /// `‖B + Bᵀ‖_max`
    pub antisymmetry_max: f64,
    /// Largest `h |φᵀ (B + Bᵀ) ψ|` over pairs of test covectors.
    pub weak_antisymmetry: f64,
    /// `|{F,{G,K}} + cyclic|` on the three linear functionals.
    pub jacobi: f64,
    /// `h max|φ| max|ψ| max|χ|`
    pub jacobi_scale: f64,
}

/// `u^i(x) = 2 + sin(2πx + i)` on the lattice grid.
pub fn smooth_state(lattice: &LatticeBracket) -> GridField {
    let grid = lattice.grid();
    (0..lattice.components())
        .map(|i| grid.iter().map(|x| 2.0 + (std::f64::consts::TAU * x + i as f64).sin()).collect())
        .collect()
}

/// Smooth flattened test covector `φ_i(x) = cos(2π·freq·x + phase + i)`.
pub fn smooth_covector(lattice: &LatticeBracket, freq: f64, phase: f64) -> Vec<f64> {
    let grid = lattice.grid();
    (0..lattice.components())
        .flat_map(|i| {
            grid.iter()
                .map(move |x| (std::f64::consts::TAU * freq * x + phase + i as f64).cos())
                .collect::<Vec<_>>()
        })
        .collect()
}

/// `g^{ij}(u) = δ^{ij} u^i` with `b^{ij}_k = ½ δ^{ij} δ^i_k`, which satisfies
/// `b^{ij}_k + b^{ji}_k = ∂g^{ij}/∂u^k`.
pub fn linear_diagonal_lattice(sites: usize, components: usize) -> Result<LatticeBracket> {
    let b = ProductTensor::from_fn(components, |i, j, k| if i == j && j == k { 0.5 } else { 0.0 });
    LatticeBracket::new(sites, move |u| DMatrix::from_diagonal(&DVector::from_column_slice(u)), b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic() -> Observable {
        Observable::new(|y| 0.5 * (y[0] * y[0] + y[1] * y[1])).with_gradient(|y| vec![y[0], y[1]])
    }

    #[test]
    fn position_momentum_bracket_is_minus_one() {
        let v = canonical_bracket(&Observable::coordinate(0), &Observable::coordinate(1), &[0.3, 0.7]).unwrap();
        assert_eq!(v, -1.0);
    }

    #[test]
    fn bracket_of_positions_vanishes() {
        let y = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(canonical_bracket(&Observable::coordinate(0), &Observable::coordinate(1), &y).unwrap(), 0.0);
        let a = Observable::new(|y| y[0] * y[2] + y[3].sin());
        assert!(canonical_bracket(&a, &a, &y).unwrap().abs() < 1e-14);
    }

    #[test]
    fn so3_spin_bracket() {
        let y = [0.4, -1.1, 2.3];
        let l = |i| Observable::coordinate(i);
        let v = extended_bracket(&l(0), &l(1), &y, &StructureConstants::so3()).unwrap();
        assert_eq!(v, -y[2]);
        let casimir = Observable::new(|y| y.iter().map(|v| v * v).sum())
            .with_gradient(|y| y.iter().map(|v| 2.0 * v).collect());
        for j in 0..3 {
            assert!(extended_bracket(&casimir, &l(j), &y, &StructureConstants::so3()).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn zero_gamma_reduces_to_canonical() {
        let y = [0.5, 1.5, 0.2];
        let a = Observable::new(|y| y[0] * y[1] * y[2]);
        let b = Observable::new(|y| y[0] + y[1] * y[1]);
        let e = extended_bracket(&a, &b, &y, &StructureConstants::zero(1)).unwrap();
        let ga = a.gradient(&y);
        let gb = b.gradient(&y);
        assert!((e - (ga[1] * gb[0] - gb[1] * ga[0])).abs() < 1e-14);
    }

    #[test]
    fn structure_constants_reject_nonantisymmetric_input() {
        let mut data = vec![0.0; 8];
        data[1] = 1.0;
        assert!(matches!(StructureConstants::new(2, data), Err(Error::NotAntisymmetric { .. })));
        assert!(StructureConstants::so3().jacobi_residual() < 1e-15);
    }

    #[test]
    fn paracomplex_bracket_examples() {
        let g = DMatrix::identity(1, 1);
        let one = ParaVector::new(vec![ParaNumber::ONE]).unwrap();
        let e = ParaVector::new(vec![ParaNumber::E]).unwrap();
        assert_eq!(paracomplex_bracket(&g, &one, &e).unwrap(), -0.5);
        let via = paracomplex_bracket_via_conjugate(&g, &one, &e).unwrap();
        assert_eq!(via, ParaNumber::real(-0.5));
        assert_eq!(paracomplex_bracket(&g, &e, &e).unwrap(), 0.0);
    }

    #[test]
    fn evolution_of_position_under_oscillator() {
        assert_eq!(evolution_derivative(&harmonic(), &Observable::coordinate(0), &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(evolution_derivative(&harmonic(), &Observable::coordinate(0), &[1.0, 0.5]).unwrap(), 0.5);
        assert_eq!(evolution_derivative(&harmonic(), &harmonic(), &[1.0, 0.5]).unwrap(), 0.0);
    }

    #[test]
    fn local_lie_bracket_examples() {
        let n = 32;
        let h = 1.0 / n as f64;
        let q = vec![(0..n).map(|s| (std::f64::consts::TAU * s as f64 * h).sin()).collect::<Vec<_>>()];
        let p = vec![vec![1.0; n]];
        let b = ProductTensor::from_data(1, vec![1.0]).unwrap();
        let out = local_lie_bracket(&b, &p, &q, h).unwrap();
        assert_eq!(out[0], central_difference(&q[0], h));
        let same = local_lie_bracket(&b, &q, &q, h).unwrap();
        assert!(same[0].iter().all(|v| *v == 0.0));
        let zero = local_lie_bracket(&ProductTensor::zeros(1), &p, &q, h).unwrap();
        assert!(zero[0].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn constant_lattice_bracket_is_exactly_skew() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let lb = LatticeBracket::new(16, move |_| g.clone(), ProductTensor::zeros(2)).unwrap();
        let u = smooth_state(&lb);
        let b = lb.assemble(&u).unwrap();
        assert_eq!((&b + b.transpose()).amax(), 0.0);
        let [x, y, z] = [1.0, 2.0, 3.0].map(|f| smooth_covector(&lb, f, 0.3));
        let r = lb.check(&u, [&x, &y, &z]).unwrap();
        assert_eq!(r.antisymmetry_max, 0.0);
        assert!(r.jacobi < 1e-12);
    }

    #[test]
    fn lattice_rejects_tiny_grids() {
        assert!(linear_diagonal_lattice(3, 1).is_err());
    }
}
