//! Two-forms, the paracomplex Dolbeault calculus, the Lorentzian Legendre
//! transform and Hamiltonian flows.
//!
//! Component conventions: a two-form is stored as `J_ij = Ω(∂_i, ∂_j)`, so
//! `Σ_α dx^α ∧ dp_α` has `J = [[0, I], [-I, 0]]`. Hamiltonian vector fields
//! solve `ι_X Ω = dH`, i.e. `X = J^{-T} ∇H`, which gives `ẋ = p, ṗ = -x` for
//! the harmonic oscillator.
//!
//! Realification of `Ω_ℭ = (e/2) g_jk dz^j ∧ dz̄^k` uses real coordinates
//! ordered `(x¹..x^m, y¹..y^m)` with `z = x + e y`. The real part of the
//! expansion is `-g_jk dx^j ∧ dy^k`; it is multiplied by [`ORIENTATION`]
//! `= -1`, so the stored form is `J = [[0, g], [-g, 0]]`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::fd;
use crate::geometry::{MetricField, PotentialField, MAX_CONDITION};
use crate::linalg;
use crate::paracomplex::ParaNumber;
use crate::poisson::Observable;

/// Overall sign applied to the real part of the expanded `Ω_ℭ`.
pub const ORIENTATION: f64 = -1.0;

/// Relative step of the fourth-order stencils used on form coefficients.
pub const FORM_STEP: f64 = 1e-3;

/// Positions, momenta and an optional spin block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub z: Vec<f64>,
    pub p: Vec<f64>,
    pub spin: Vec<f64>,
}

impl PhasePoint {
    pub fn new(z: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        check_len(z.len(), p.len())?;
        Ok(Self { z, p, spin: Vec::new() })
    }

    pub fn with_spin(mut self, spin: Vec<f64>) -> Self {
        self.spin = spin;
        self
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    /// `(z, p, Λ)` concatenated.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.z.len() + self.spin.len());
        out.extend_from_slice(&self.z);
        out.extend_from_slice(&self.p);
        out.extend_from_slice(&self.spin);
        out
    }

    pub fn from_flat(n: usize, spins: usize, y: &[f64]) -> Result<Self> {
        check_len(2 * n + spins, y.len())?;
        Ok(Self { z: y[..n].to_vec(), p: y[n..2 * n].to_vec(), spin: y[2 * n..].to_vec() })
    }
}

type FormFn = Arc<dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync>;

/// A two-form given by its antisymmetric coefficient matrix `J_ij(y)`.
#[derive(Clone)]
pub struct TwoForm {
    dim: usize,
    coeffs: FormFn,
}

impl fmt::Debug for TwoForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TwoForm").field("dim", &self.dim).finish()
    }
}

impl TwoForm {
    pub fn new<F>(dim: usize, coeffs: F) -> Self
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self::fallible(dim, move |y| Ok(coeffs(y)))
    }

    pub fn fallible<F>(dim: usize, coeffs: F) -> Self
    where
        F: Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    {
        Self { dim, coeffs: Arc::new(coeffs) }
    }

    pub fn constant(j: DMatrix<f64>) -> Self {
        let dim = j.nrows();
        Self::new(dim, move |_| j.clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coefficients at `y`, rejecting asymmetric output beyond `1e-12`.
    pub fn eval(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        check_len(self.dim, y.len())?;
        let j = (self.coeffs)(y)?;
        if j.nrows() != self.dim || j.ncols() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: j.nrows() });
        }
        let residual = linalg::skew_residual(&j);
        if residual > 1e-12 * j.amax().max(1.0) {
            return Err(Error::NotAntisymmetric { residual });
        }
        Ok(j)
    }

    /// `Ω(ξ, η) = ξ^i J_ij η^j`
    pub fn pair(&self, y: &[f64], xi: &[f64], eta: &[f64]) -> Result<f64> {
        let j = self.eval(y)?;
        check_len(self.dim, xi.len())?;
        check_len(self.dim, eta.len())?;
        Ok(DVector::from_column_slice(xi).dot(&(&j * DVector::from_column_slice(eta))))
    }

    /// `J^{ij}`, the matrix inverse of `J_ij`.
    pub fn inverse(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let j = self.eval(y)?;
        if !(linalg::condition_number(&j) <= MAX_CONDITION) {
            return Err(Error::DegenerateForm);
        }
        j.try_inverse().ok_or(Error::DegenerateForm)
    }
}

/// `Σ_α dx^α ∧ dp_α` on `(x, p)`.
pub fn canonical_two_form(n: usize) -> TwoForm {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for a in 0..n {
        j[(a, n + a)] = 1.0;
        j[(n + a, a)] = -1.0;
    }
    TwoForm::constant(j)
}

/// Realification of `(e/2) g_jk dz^j ∧ dz̄^k` for a constant `m × m` matrix `g`.
///
/// Each `dz^j = dx^j + e dy^j` and `dz̄^k = dx^k - e dy^k` is expanded in the
/// real coframe with paracomplex coefficients `c_ab`, and
/// `J_ab = ORIENTATION · Re(c_ab - c_ba)`.
pub fn realify_paracomplex_form(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = g.nrows();
    check_len(m, g.ncols())?;
    let dz = |j: usize, a: usize| -> ParaNumber {
        if a == j {
            ParaNumber::ONE
        } else if a == m + j {
            ParaNumber::E
        } else {
            ParaNumber::ZERO
        }
    };
    let half_e = ParaNumber::E.scale(0.5);
    let mut c = vec![ParaNumber::ZERO; 4 * m * m];
    for a in 0..2 * m {
        for b in 0..2 * m {
            let mut acc = ParaNumber::ZERO;
            for j in 0..m {
                for k in 0..m {
                    if g[(j, k)] != 0.0 {
                        acc = acc + half_e * dz(j, a) * dz(k, b).conj() * g[(j, k)];
                    }
                }
            }
            c[a * 2 * m + b] = acc;
        }
    }
    Ok(DMatrix::from_fn(2 * m, 2 * m, |a, b| {
        ORIENTATION * (c[a * 2 * m + b] - c[b * 2 * m + a]).re
    }))
}

/// The realified form with `g_jk` depending on the real point `(x, y)`.
pub fn paracomplex_two_form<G>(m: usize, g: G) -> TwoForm
where
    G: Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync + 'static,
{
    TwoForm::fallible(2 * m, move |xy| {
        let gm = g(xy)?;
        check_len(m, gm.nrows())?;
        realify_paracomplex_form(&gm)
    })
}

/// `∂²φ/∂z₊^α ∂z₋^β` for `φ` on adapted coordinates `(z₊¹..z₊^m, z₋¹..z₋^m)`.
pub fn dolbeault_form(phi: &PotentialField, zpm: &[f64]) -> Result<DMatrix<f64>> {
    let n = phi.dim();
    if n % 2 != 0 {
        return Err(Error::InvalidInput("adapted coordinates come in pairs".into()));
    }
    let m = n / 2;
    let h = phi.hessian(zpm)?;
    Ok(h.view((0, m), (m, m)).into_owned())
}

/// Metric `g_jk(x, y) = ∂₊∂₋φ` evaluated at `z₊ = x + y`, `z₋ = x - y`.
pub fn dolbeault_metric(phi: PotentialField) -> impl Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync + 'static {
    move |xy: &[f64]| {
        let m = xy.len() / 2;
        let zpm: Vec<f64> = (0..m).map(|j| xy[j] + xy[m + j]).chain((0..m).map(|j| xy[j] - xy[m + j])).collect();
        dolbeault_form(&phi, &zpm)
    }
}

fn matrix_partial4(form: &TwoForm, y: &[f64], k: usize) -> Result<DMatrix<f64>> {
    let h = fd::scaled_step(FORM_STEP, y[k]);
    let mut w = y.to_vec();
    let mut at = |offset: f64| {
        w[k] = y[k] + offset * h;
        form.eval(&w)
    };
    let near = at(1.0)? - at(-1.0)?;
    let far = at(2.0)? - at(-2.0)?;
    Ok((near * 8.0 - far) / (12.0 * h))
}

/// `(dΩ)_ijk = ∂_i J_jk + ∂_j J_ki + ∂_k J_ij`, flattened as `[i*d*d + j*d + k]`.
pub fn exterior_derivative(form: &TwoForm, y: &[f64]) -> Result<Vec<f64>> {
    let d = form.dim;
    check_len(d, y.len())?;
    let partials: Vec<DMatrix<f64>> = (0..d).map(|k| matrix_partial4(form, y, k)).collect::<Result<_>>()?;
    let mut out = vec![0.0; d * d * d];
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                out[(i * d + j) * d + k] = partials[i][(j, k)] + partials[j][(k, i)] + partials[k][(i, j)];
            }
        }
    }
    Ok(out)
}

pub fn closedness_residual(form: &TwoForm, samples: &[Vec<f64>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for y in samples {
        worst = exterior_derivative(form, y)?.iter().fold(worst, |a, v| a.max(v.abs()));
    }
    Ok(worst)
}

type DenseFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A differential form of any degree stored as its dense antisymmetric
/// coefficient tensor `ω(∂_{i1}, …, ∂_{ik})`, flattened row-major.
#[derive(Clone)]
pub struct DenseForm {
    dim: usize,
    degree: usize,
    coeffs: DenseFn,
}

impl fmt::Debug for DenseForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DenseForm").field("dim", &self.dim).field("degree", &self.degree).finish()
    }
}

impl DenseForm {
    pub fn function<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self { dim, degree: 0, coeffs: Arc::new(move |x| vec![f(x)]) }
    }

    pub fn one_form<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self { dim, degree: 1, coeffs: Arc::new(f) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.coeffs)(x)
    }

    /// Exterior derivative restricted to the coordinates flagged in `mask`:
    /// `(dω)_{i0..ik} = Σ_r (-1)^r [mask i_r] ∂_{i_r} ω_{i0..î_r..ik}`.
    pub fn partial_exterior(&self, mask: Arc<Vec<bool>>, base_step: f64) -> DenseForm {
        let (dim, degree) = (self.dim, self.degree);
        let inner = self.clone();
        let coeffs = move |x: &[f64]| {
            let len_in = dim.pow(degree as u32);
            let mut derivs = vec![vec![0.0; len_in]; dim];
            let mut w = x.to_vec();
            for a in (0..dim).filter(|&a| mask[a]) {
                let h = fd::scaled_step(base_step, x[a]);
                w[a] = x[a] + h;
                let plus = inner.eval(&w);
                w[a] = x[a] - h;
                let minus = inner.eval(&w);
                w[a] = x[a];
                for (d, (p, m)) in derivs[a].iter_mut().zip(plus.iter().zip(&minus)) {
                    *d = (p - m) / (2.0 * h);
                }
            }
            let len_out = dim.pow(degree as u32 + 1);
            let mut out = vec![0.0; len_out];
            let mut idx = vec![0usize; degree + 1];
            for (flat, o) in out.iter_mut().enumerate() {
                let mut r = flat;
                for slot in idx.iter_mut().rev() {
                    *slot = r % dim;
                    r /= dim;
                }
                let mut acc = 0.0;
                for pos in 0..=degree {
                    let a = idx[pos];
                    if !mask[a] {
                        continue;
                    }
                    let rest = idx.iter().enumerate().filter(|&(q, _)| q != pos).fold(0, |acc, (_, &v)| acc * dim + v);
                    let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                    acc += sign * derivs[a][rest];
                }
                *o = acc;
            }
            out
        };
        DenseForm { dim, degree: degree + 1, coeffs: Arc::new(coeffs) }
    }
}

/// Residuals of `(d′)² = 0`, `(d″)² = 0` and `d′d″ + d″d′ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResiduals {
    pub d_plus_squared: f64,
    pub d_minus_squared: f64,
    pub anticommutator: f64,
}

impl SplitResiduals {
    pub fn max(&self) -> f64 {
        self.d_plus_squared.max(self.d_minus_squared).max(self.anticommutator)
    }
}

/// Step used for the nested differences of the splitting check.
pub const SPLIT_STEP: f64 = 1e-3;

/// Splitting residuals on forms over adapted coordinates `(z₊, z₋)` of
/// dimension `2m`, where `d′` differentiates along `z₊` and `d″` along `z₋`.
pub fn dbar_split_residuals(forms: &[DenseForm], samples: &[Vec<f64>]) -> Result<SplitResiduals> {
    let mut out = SplitResiduals { d_plus_squared: 0.0, d_minus_squared: 0.0, anticommutator: 0.0 };
    for form in forms {
        let n = form.dim();
        if n % 2 != 0 {
            return Err(Error::InvalidInput("adapted coordinates come in pairs".into()));
        }
        let m = n / 2;
        let plus = Arc::new((0..n).map(|a| a < m).collect::<Vec<_>>());
        let minus = Arc::new((0..n).map(|a| a >= m).collect::<Vec<_>>());
        let dp = form.partial_exterior(plus.clone(), SPLIT_STEP);
        let dm = form.partial_exterior(minus.clone(), SPLIT_STEP);
        let dpp = dp.partial_exterior(plus.clone(), SPLIT_STEP);
        let dmm = dm.partial_exterior(minus.clone(), SPLIT_STEP);
        let dmp = dp.partial_exterior(minus, SPLIT_STEP);
        let dpm = dm.partial_exterior(plus, SPLIT_STEP);
        let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        for x in samples {
            check_len(n, x.len())?;
            out.d_plus_squared = out.d_plus_squared.max(max_abs(&dpp.eval(x)));
            out.d_minus_squared = out.d_minus_squared.max(max_abs(&dmm.eval(x)));
            let anti: Vec<f64> = dmp.eval(x).iter().zip(dpm.eval(x)).map(|(a, b)| a + b).collect();
            out.anticommutator = out.anticommutator.max(max_abs(&anti));
        }
    }
    Ok(out)
}

type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `L = ½C(ξ^μ ξ_μ - 1) + κ₂ ξ^μ A_μ(z) - U(z)` with `ξ_μ = λ_μν ξ^ν / κ₁`.
#[derive(Clone)]
pub struct LorentzLagrangian {
    pub c: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    lambda: Vec<f64>,
    gauge: Option<VectorFn>,
    scalar: Option<ScalarFn>,
}

impl fmt::Debug for LorentzLagrangian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LorentzLagrangian")
            .field("c", &self.c)
            .field("kappa1", &self.kappa1)
            .field("kappa2", &self.kappa2)
            .field("lambda", &self.lambda)
            .field("gauge", &self.gauge.is_some())
            .field("scalar", &self.scalar.is_some())
            .finish()
    }
}

/// Momentum, force and energy at one `(z, ξ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendreOutput {
    pub p: Vec<f64>,
    pub f: Vec<f64>,
    pub h: f64,
}

impl LorentzLagrangian {
    /// `λ` is the diagonal of the signature matrix; entries must be `±1`.
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() || lambda.iter().any(|&l| l != 1.0 && l != -1.0) {
            return Err(Error::InvalidInput("signature entries must be ±1".into()));
        }
        Ok(Self { c: 1.0, kappa1: 1.0, kappa2: 0.0, lambda, gauge: None, scalar: None })
    }

    /// Signature `(1, 1, 1, -1)`.
    pub fn minkowski() -> Self {
        Self::new(vec![1.0, 1.0, 1.0, -1.0]).expect("valid signature")
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_kappa1(mut self, k: f64) -> Self {
        self.kappa1 = k;
        self
    }

    pub fn with_kappa2(mut self, k: f64) -> Self {
        self.kappa2 = k;
        self
    }

    pub fn with_gauge<A>(mut self, a: A) -> Self
    where
        A: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.gauge = Some(Arc::new(a));
        self
    }

    pub fn with_scalar<U>(mut self, u: U) -> Self
    where
        U: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.scalar = Some(Arc::new(u));
        self
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn lower(&self, xi: &[f64]) -> Vec<f64> {
        xi.iter().zip(&self.lambda).map(|(x, l)| l * x / self.kappa1).collect()
    }

    fn gauge_at(&self, z: &[f64]) -> Vec<f64> {
        match &self.gauge {
            Some(a) => a(z),
            None => vec![0.0; self.dim()],
        }
    }

    fn scalar_at(&self, z: &[f64]) -> f64 {
        self.scalar.as_ref().map_or(0.0, |u| u(z))
    }

    pub fn value(&self, z: &[f64], xi: &[f64]) -> Result<f64> {
        check_len(self.dim(), z.len())?;
        check_len(self.dim(), xi.len())?;
        let norm: f64 = xi.iter().zip(self.lower(xi)).map(|(a, b)| a * b).sum();
        let a = self.gauge_at(z);
        check_len(self.dim(), a.len())?;
        let coupling: f64 = xi.iter().zip(&a).map(|(x, a)| x * a).sum();
        Ok(0.5 * self.c * (norm - 1.0) + self.kappa2 * coupling - self.scalar_at(z))
    }

    /// `ξ^μ = κ₁ λ^μν (p_ν - κ₂ A_ν) / C`.
    pub fn inverse_legendre(&self, z: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), p.len())?;
        if self.c == 0.0 {
            return Err(Error::InvalidInput("C = 0 makes the Legendre map singular".into()));
        }
        let a = self.gauge_at(z);
        Ok((0..self.dim()).map(|mu| self.kappa1 * self.lambda[mu] * (p[mu] - self.kappa2 * a[mu]) / self.c).collect())
    }

    /// `H(z, p)` through the inverse Legendre map.
    pub fn hamiltonian(&self, z: &[f64], p: &[f64]) -> Result<f64> {
        let xi = self.inverse_legendre(z, p)?;
        Ok(legendre_hamiltonian(self, &xi, z)?.h)
    }
}

/// `p_μ = C ξ_μ + κ₂ A_μ`, `f_μ = κ₂ ξ^ν ∂_μ A_ν - ∂_μ U` and `H = ξ^μ p_μ - L`.
pub fn legendre_hamiltonian(lag: &LorentzLagrangian, xi: &[f64], z: &[f64]) -> Result<LegendreOutput> {
    let n = lag.dim();
    check_len(n, xi.len())?;
    check_len(n, z.len())?;
    let a = lag.gauge_at(z);
    let p: Vec<f64> = lag.lower(xi).iter().zip(&a).map(|(l, a)| lag.c * l + lag.kappa2 * a).collect();
    let mut f = vec![0.0; n];
    if lag.kappa2 != 0.0 && lag.gauge.is_some() {
        for (mu, fm) in f.iter_mut().enumerate() {
            let h = fd::scaled_step(fd::FIRST_STEP, z[mu]);
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[mu] += h;
            zm[mu] -= h;
            let (ap, am) = (lag.gauge_at(&zp), lag.gauge_at(&zm));
            *fm = lag.kappa2 * (0..n).map(|nu| xi[nu] * (ap[nu] - am[nu]) / (2.0 * h)).sum::<f64>();
        }
    }
    if let Some(u) = &lag.scalar {
        let grad = fd::gradient(|x| u(x), z);
        for (fm, g) in f.iter_mut().zip(grad) {
            *fm -= g;
        }
    }
    let xp: f64 = xi.iter().zip(&p).map(|(x, p)| x * p).sum();
    let h = xp - lag.value(z, xi)?;
    Ok(LegendreOutput { p, f, h })
}

/// `X` with `ι_X Ω = dH`, i.e. `X = J^{-T} ∇H`.
pub fn hamiltonian_vector_field(h: &Observable, form: &TwoForm, y: &[f64]) -> Result<Vec<f64>> {
    let jinv = form.inverse(y)?;
    let grad = DVector::from_vec(h.gradient(y));
    check_len(form.dim(), grad.len())?;
    Ok((jinv.transpose() * grad).iter().copied().collect())
}

/// A Hamiltonian on canonical `(z, p)`.
#[derive(Debug, Clone)]
pub enum HamiltonianSystem {
    /// `H = T(p) + V(z)`; `kinetic` is evaluated on `p`, `potential` on `z`.
    Separable { kinetic: Observable, potential: Observable },
    General(Observable),
}

impl HamiltonianSystem {
    /// `H = ½(p·p + z·z)`.
    pub fn harmonic_oscillator() -> Self {
        let half_sq = || {
            Observable::new(|v| 0.5 * v.iter().map(|x| x * x).sum::<f64>()).with_gradient(|v| v.to_vec())
        };
        Self::Separable { kinetic: half_sq(), potential: half_sq() }
    }

    /// `H = ½ p·p`.
    pub fn free_particle() -> Self {
        Self::Separable {
            kinetic: Observable::new(|v| 0.5 * v.iter().map(|x| x * x).sum::<f64>()).with_gradient(|v| v.to_vec()),
            potential: Observable::constant(0.0),
        }
    }

    pub fn energy(&self, y: &PhasePoint) -> f64 {
        match self {
            Self::Separable { kinetic, potential } => kinetic.eval(&y.p) + potential.eval(&y.z),
            Self::General(h) => h.eval(&y.flat()),
        }
    }

    /// The flat observable `H(z, p)`.
    pub fn observable(&self, n: usize) -> Observable {
        let sys = self.clone();
        Observable::new(move |y| sys.energy(&PhasePoint { z: y[..n].to_vec(), p: y[n..2 * n].to_vec(), spin: Vec::new() }))
    }

    fn vector_field(&self, y: &[f64], n: usize) -> Vec<f64> {
        let (dz, dp) = match self {
            Self::Separable { kinetic, potential } => {
                (kinetic.gradient(&y[n..2 * n]), potential.gradient(&y[..n]).into_iter().map(|g| -g).collect())
            }
            Self::General(h) => {
                let g = h.gradient(&y[..2 * n]);
                (g[n..].to_vec(), g[..n].iter().map(|v| -v).collect::<Vec<_>>())
            }
        };
        dz.into_iter().chain(dp).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub s: f64,
    pub z: Vec<f64>,
    pub p: Vec<f64>,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    /// `max_t |H(y_t) - H(y_0)|`
    pub max_energy_drift: f64,
}

const MIDPOINT_TOLERANCE: f64 = 1e-12;
const MIDPOINT_MAX_ITERATIONS: usize = 50;

/// Leapfrog for separable systems, implicit midpoint otherwise.
pub fn integrate(sys: &HamiltonianSystem, y0: &PhasePoint, dt: f64, steps: usize) -> Result<Trajectory> {
    if !y0.spin.is_empty() {
        return Err(Error::InvalidInput("integration acts on (z, p) only".into()));
    }
    let n = y0.n();
    check_len(n, y0.p.len())?;
    let h0 = sys.energy(y0);
    let mut records = Vec::with_capacity(steps + 1);
    records.push(TrajectoryRecord { s: 0.0, z: y0.z.clone(), p: y0.p.clone(), h: h0 });
    let mut y = y0.clone();
    let mut drift: f64 = 0.0;
    for step in 1..=steps {
        match sys {
            HamiltonianSystem::Separable { kinetic, potential } => {
                for (p, g) in y.p.iter_mut().zip(potential.gradient(&y.z)) {
                    *p -= 0.5 * dt * g;
                }
                for (z, g) in y.z.iter_mut().zip(kinetic.gradient(&y.p)) {
                    *z += dt * g;
                }
                for (p, g) in y.p.iter_mut().zip(potential.gradient(&y.z)) {
                    *p -= 0.5 * dt * g;
                }
            }
            HamiltonianSystem::General(_) => {
                let start = y.flat();
                let mut next: Vec<f64> =
                    start.iter().zip(sys.vector_field(&start, n)).map(|(a, v)| a + dt * v).collect();
                let mut converged = dt == 0.0;
                for _ in 0..MIDPOINT_MAX_ITERATIONS {
                    let mid: Vec<f64> = start.iter().zip(&next).map(|(a, b)| 0.5 * (a + b)).collect();
                    let cand: Vec<f64> =
                        start.iter().zip(sys.vector_field(&mid, n)).map(|(a, v)| a + dt * v).collect();
                    let scale = cand.iter().fold(1.0f64, |a, v| a.max(v.abs()));
                    let change = cand.iter().zip(&next).fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
                    next = cand;
                    if change <= MIDPOINT_TOLERANCE * scale {
                        converged = true;
                        break;
                    }
                }
                if !converged {
                    return Err(Error::NonConvergence { iterations: MIDPOINT_MAX_ITERATIONS });
                }
                y.z.copy_from_slice(&next[..n]);
                y.p.copy_from_slice(&next[n..]);
            }
        }
        let h = sys.energy(&y);
        drift = drift.max((h - h0).abs());
        records.push(TrajectoryRecord { s: step as f64 * dt, z: y.z.clone(), p: y.p.clone(), h });
    }
    Ok(Trajectory { records, max_energy_drift: drift })
}

/// Least-squares slope of `ln(drift)` against `ln(dt)` for integrations over
/// a fixed time span `total`.
pub fn drift_order(sys: &HamiltonianSystem, y0: &PhasePoint, total: f64, dts: &[f64]) -> Result<f64> {
    if dts.len() < 2 {
        return Err(Error::InvalidInput("need at least two step sizes".into()));
    }
    let mut pts = Vec::with_capacity(dts.len());
    for &dt in dts {
        let steps = (total / dt).round() as usize;
        let drift = integrate(sys, y0, dt, steps)?.max_energy_drift;
        pts.push((dt.ln(), drift.ln()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// `½ g^{ij}(z) p_i p_j + U(z)`.
pub fn quadratic_energy(metric: &MetricField, y: &PhasePoint, u: Option<&dyn Fn(&[f64]) -> f64>) -> Result<f64> {
    let ginv = metric.inverse(&y.z)?;
    check_len(metric.dim(), y.p.len())?;
    let p = DVector::from_column_slice(&y.p);
    Ok(0.5 * p.dot(&(ginv * &p)) + u.map_or(0.0, |f| f(&y.z)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form_examples() {
        let j1 = canonical_two_form(1).eval(&[0.0, 0.0]).unwrap();
        assert_eq!(j1, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let f3 = canonical_two_form(3);
        let y = [0.0; 6];
        let prod = f3.eval(&y).unwrap() * f3.inverse(&y).unwrap();
        assert!((prod - DMatrix::identity(6, 6)).amax() < 1e-15);
        let f1 = canonical_two_form(1);
        assert_eq!(f1.pair(&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(f1.pair(&[0.0, 0.0], &[0.0, 1.0], &[1.0, 0.0]).unwrap(), -1.0);
    }

    #[test]
    fn realified_unit_form_is_dx_wedge_dy() {
        let j = realify_paracomplex_form(&DMatrix::identity(1, 1)).unwrap();
        assert_eq!(j, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let zero = realify_paracomplex_form(&DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(zero.amax(), 0.0);
    }

    #[test]
    fn realified_form_has_block_structure() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, -1.0]);
        let j = realify_paracomplex_form(&g).unwrap();
        assert_eq!(j.view((0, 2), (2, 2)).into_owned(), g);
        assert_eq!(j.view((2, 0), (2, 2)).into_owned(), -&g);
        assert_eq!(j.view((0, 0), (2, 2)).amax(), 0.0);
        assert_eq!(j.view((2, 2), (2, 2)).amax(), 0.0);
        assert_eq!(&j, &((&j - j.transpose()) * 0.5));
    }

    #[test]
    fn constant_forms_are_closed() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
        let form = paracomplex_two_form(2, move |_| Ok(g.clone()));
        let samples = vec![vec![0.1, 0.2, 0.3, 0.4]];
        assert_eq!(closedness_residual(&form, &samples).unwrap(), 0.0);
        assert_eq!(closedness_residual(&canonical_two_form(2), &samples).unwrap(), 0.0);
    }

    #[test]
    fn non_closed_form_detected() {
        let form = TwoForm::new(4, |x| {
            let mut j = DMatrix::zeros(4, 4);
            j[(0, 1)] = x[0];
            j[(1, 0)] = -x[0];
            j[(2, 3)] = x[0];
            j[(3, 2)] = -x[0];
            j
        });
        assert!(closedness_residual(&form, &[vec![0.5, 0.1, -0.2, 0.3]]).unwrap() > 0.1);
    }

    #[test]
    fn dolbeault_examples() {
        let prod = PotentialField::new(2, |z| z[0] * z[1]);
        assert!((dolbeault_form(&prod, &[0.3, 0.8]).unwrap()[(0, 0)] - 1.0).abs() < 1e-8);
        let pure = PotentialField::new(2, |z| z[0] * z[0]);
        assert!(dolbeault_form(&pure, &[0.3, 0.8]).unwrap()[(0, 0)].abs() < 1e-8);
        let mixed = PotentialField::new(2, |z| z[0] * z[0] * z[1]);
        assert!((dolbeault_form(&mixed, &[3.0, 0.5]).unwrap()[(0, 0)] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn splitting_of_constant_function_is_exact() {
        let r = dbar_split_residuals(&[DenseForm::function(2, |_| 4.2)], &[vec![0.1, 0.2]]).unwrap();
        assert_eq!(r.max(), 0.0);
    }

    #[test]
    fn splitting_residuals_are_small() {
        let forms = [
            DenseForm::function(2, |z| z[0] * z[1]),
            DenseForm::function(2, |z| z[0].sin() * z[1].cos()),
            DenseForm::one_form(4, |z| vec![z[0] * z[3], z[1] * z[2] * z[2], (z[0] * z[1]).sin(), z[3].exp()]),
        ];
        let r = dbar_split_residuals(&forms, &[vec![0.3, -0.7, 1.1, 0.2][..4].to_vec()]);
        assert!(r.is_err());
        let r = dbar_split_residuals(&forms[..2], &[vec![0.3, -0.7], vec![1.2, 0.4]]).unwrap();
        assert!(r.max() < 1e-6, "{r:?}");
        let r = dbar_split_residuals(&forms[2..], &[vec![0.3, -0.7, 1.1, 0.2]]).unwrap();
        assert!(r.max() < 1e-6, "{r:?}");
    }

    #[test]
    fn lorentzian_legendre_examples() {
        let lag = LorentzLagrangian::minkowski();
        let z = [0.0; 4];
        let out = legendre_hamiltonian(&lag, &[1.0, 0.0, 0.0, 0.0], &z).unwrap();
        assert_eq!(out.p, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(out.h, 1.0);
        assert_eq!(out.f, vec![0.0; 4]);
        let out = legendre_hamiltonian(&lag, &[0.0, 0.0, 0.0, 1.0], &z).unwrap();
        assert_eq!(out.p, vec![0.0, 0.0, 0.0, -1.0]);
        assert_eq!(out.h, 0.0);
        let xi = [0.3, -1.2, 0.7, 2.0];
        let back = lag.inverse_legendre(&z, &legendre_hamiltonian(&lag, &xi, &z).unwrap().p).unwrap();
        for (a, b) in back.iter().zip(xi) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gauge_force() {
        // A = (0, z⁰, 0, 0): f_0 = κ₂ ξ¹
        let lag = LorentzLagrangian::minkowski().with_kappa2(0.5).with_gauge(|z| vec![0.0, z[0], 0.0, 0.0]);
        let out = legendre_hamiltonian(&lag, &[1.0, 2.0, 0.0, 0.0], &[0.3, 0.0, 0.0, 0.0]).unwrap();
        assert!((out.f[0] - 1.0).abs() < 1e-9);
        assert!((out.p[1] - (2.0 + 0.5 * 0.3)).abs() < 1e-15);
    }

    #[test]
    fn vector_field_examples() {
        let form = canonical_two_form(1);
        let osc = HamiltonianSystem::harmonic_oscillator().observable(1);
        let x = hamiltonian_vector_field(&osc, &form, &[1.0, 0.0]).unwrap();
        assert!(x[0].abs() < 1e-12 && (x[1] + 1.0).abs() < 1e-12);
        let c = hamiltonian_vector_field(&Observable::constant(3.0), &form, &[1.0, 0.0]).unwrap();
        assert_eq!(c, vec![0.0, 0.0]);
        let t = hamiltonian_vector_field(&Observable::coordinate(1), &form, &[1.0, 0.0]).unwrap();
        assert_eq!(t, vec![1.0, 0.0]);
        let degenerate = TwoForm::constant(DMatrix::zeros(2, 2));
        assert!(matches!(hamiltonian_vector_field(&osc, &degenerate, &[1.0, 0.0]), Err(Error::DegenerateForm)));
    }

    #[test]
    fn oscillator_energy_drift() {
        let y0 = PhasePoint::new(vec![1.0], vec![0.0]).unwrap();
        let t = integrate(&HamiltonianSystem::harmonic_oscillator(), &y0, 1e-3, 10_000).unwrap();
        assert!(t.max_energy_drift < 1e-6, "{}", t.max_energy_drift);
        assert_eq!(t.records.len(), 10_001);
    }

    #[test]
    fn free_particle_moves_in_straight_lines() {
        let y0 = PhasePoint::new(vec![0.0, 1.0], vec![2.0, -1.0]).unwrap();
        let t = integrate(&HamiltonianSystem::free_particle(), &y0, 0.25, 8).unwrap();
        let last = t.records.last().unwrap();
        assert_eq!(last.z, vec![4.0, -1.0]);
        assert_eq!(last.p, y0.p);
        let still = integrate(&HamiltonianSystem::harmonic_oscillator(), &y0, 0.0, 5).unwrap();
        assert!(still.records.iter().all(|r| r.z == y0.z && r.p == y0.p));
    }

    #[test]
    fn implicit_midpoint_conserves_quadratic_energy() {
        let h = HamiltonianSystem::General(
            Observable::new(|y| 0.5 * (y[0] * y[0] + y[1] * y[1])).with_gradient(|y| vec![y[0], y[1]]),
        );
        let y0 = PhasePoint::new(vec![1.0], vec![0.0]).unwrap();
        let t = integrate(&h, &y0, 0.01, 500).unwrap();
        assert!(t.max_energy_drift < 1e-10, "{}", t.max_energy_drift);
    }

    #[test]
    fn quadratic_energy_examples() {
        let y = PhasePoint::new(vec![0.0, 0.0], vec![3.0, 4.0]).unwrap();
        assert_eq!(quadratic_energy(&MetricField::euclidean(2), &y, None).unwrap(), 12.5);
        let orthant = MetricField::new(1, |x| DMatrix::from_element(1, 1, 1.0 / (x[0] * x[0])));
        let y = PhasePoint::new(vec![2.0], vec![1.0]).unwrap();
        assert!((quadratic_energy(&orthant, &y, None).unwrap() - 2.0).abs() < 1e-12);
        let y = PhasePoint::new(vec![2.0], vec![0.0]).unwrap();
        let u = |z: &[f64]| z[0] * 3.0;
        assert_eq!(quadratic_energy(&orthant, &y, Some(&u)).unwrap(), 6.0);
    }
}
