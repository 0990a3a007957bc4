//! Metric fields, Levi-Civita connections and curvature residuals.
//!
//! Fields are evaluable maps from points to matrices. Derivatives come from an
//! analytic callback when one is supplied and from central differences
//! otherwise. Callbacks must be re-entrant: fields are shared across threads.
//!
//! Curvature is computed by differencing Christoffel symbols:
//!
//! ```text
//! R^i_jkl = ∂_k Γ^i_lj - ∂_l Γ^i_kj + Γ^i_km Γ^m_lj - Γ^i_lm Γ^m_kj
//! ```

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::fd::{self, FIRST_STEP, SECOND_STEP};
use crate::linalg;
use crate::statmanifold::{self, ExponentialFamily};

/// Largest condition number at which a metric still counts as nondegenerate.
pub const MAX_CONDITION: f64 = 1e12;
/// Default absolute tolerance on (scaled) curvature components.
pub const CURVATURE_TOLERANCE: f64 = 1e-6;

pub type MatrixFn = Arc<dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync>;
pub type MatrixPartialFn = Arc<dyn Fn(&[f64], usize) -> Result<DMatrix<f64>> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// How a field produces its first partial derivatives.
#[derive(Clone)]
pub enum Differentiation {
    Analytic(MatrixPartialFn),
    /// Central differences with step `base_step · max(1, |x_k|)`.
    FiniteDifference { base_step: f64 },
}

impl fmt::Debug for Differentiation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Differentiation::Analytic(_) => f.write_str("Analytic"),
            Differentiation::FiniteDifference { base_step } => {
                write!(f, "FiniteDifference {{ base_step: {base_step} }}")
            }
        }
    }
}

/// A symmetric-matrix-valued field `x ↦ g(x)` on an open set of `ℝⁿ`.
///
/// Used both for covariant metrics `g_ij` and contravariant ones `g^ij`; the
/// caller decides which.
#[derive(Clone)]
pub struct MetricField {
    dim: usize,
    value: MatrixFn,
    derivative: Differentiation,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("dim", &self.dim)
            .field("derivative", &self.derivative)
            .finish()
    }
}

impl MetricField {
    pub fn new<F>(dim: usize, value: F) -> Self
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self::fallible(dim, move |x| Ok(value(x)))
    }

    pub fn fallible<F>(dim: usize, value: F) -> Self
    where
        F: Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    {
        Self {
            dim,
            value: Arc::new(value),
            derivative: Differentiation::FiniteDifference { base_step: FIRST_STEP },
        }
    }

    /// Attaches an analytic `∂_k g` callback.
    pub fn with_partial<F>(mut self, partial: F) -> Self
    where
        F: Fn(&[f64], usize) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.derivative = Differentiation::Analytic(Arc::new(move |x, k| Ok(partial(x, k))));
        self
    }

    pub fn with_differentiation(mut self, derivative: Differentiation) -> Self {
        self.derivative = derivative;
        self
    }

    pub fn constant(m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        Self::new(n, move |_| m.clone()).with_partial(move |_, _| DMatrix::zeros(n, n))
    }

    pub fn euclidean(n: usize) -> Self {
        Self::constant(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn differentiation(&self) -> &Differentiation {
        &self.derivative
    }

    pub fn value(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_len(self.dim, x.len())?;
        let g = (self.value)(x)?;
        if g.nrows() != self.dim || g.ncols() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: g.nrows() });
        }
        let asym = linalg::asymmetry(&g);
        if asym > 1e-12 * g.amax().max(1.0) {
            return Err(Error::InvalidInput(format!("metric not symmetric (residual {asym:e})")));
        }
        Ok(g)
    }

    /// `∂g/∂x^k` at `x`.
    pub fn partial(&self, x: &[f64], k: usize) -> Result<DMatrix<f64>> {
        check_len(self.dim, x.len())?;
        match &self.derivative {
            Differentiation::Analytic(f) => f(x, k),
            Differentiation::FiniteDifference { base_step } => {
                let h = fd::scaled_step(*base_step, x[k]);
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[k] += h;
                xm[k] -= h;
                Ok((self.value(&xp)? - self.value(&xm)?) / (2.0 * h))
            }
        }
    }

    pub fn partials(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        (0..self.dim).map(|k| self.partial(x, k)).collect()
    }

    pub fn inverse(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        linalg::checked_inverse(&self.value(x)?, MAX_CONDITION)
    }

    /// Reads `self` as a contravariant metric `g^ij` and returns the covariant
    /// field `g_ij = (g^ij)⁻¹`, differentiated through
    /// `∂(G⁻¹) = -G⁻¹ (∂G) G⁻¹`.
    pub fn inverted(&self) -> MetricField {
        let this = self.clone();
        let value = {
            let this = this.clone();
            move |x: &[f64]| this.inverse(x).map(symmetrize)
        };
        let partial = move |x: &[f64], k: usize| -> Result<DMatrix<f64>> {
            let inv = this.inverse(x)?;
            let d = this.partial(x, k)?;
            Ok(symmetrize(-(&inv * d * &inv)))
        };
        MetricField {
            dim: self.dim,
            value: Arc::new(value),
            derivative: Differentiation::Analytic(Arc::new(partial)),
        }
    }

    /// `self + λ·other`, with derivatives combined the same way.
    pub fn linear_combination(&self, lambda: f64, other: &MetricField) -> Result<MetricField> {
        check_len(self.dim, other.dim)?;
        let (a, b) = (self.clone(), other.clone());
        let (a2, b2) = (self.clone(), other.clone());
        Ok(MetricField {
            dim: self.dim,
            value: Arc::new(move |x| Ok(a.value(x)? + b.value(x)? * lambda)),
            derivative: Differentiation::Analytic(Arc::new(move |x, k| {
                Ok(a2.partial(x, k)? + b2.partial(x, k)? * lambda)
            })),
        })
    }

    /// The field `∂g/∂x^direction`, differentiated by central differences of
    /// the parent's partial derivative.
    pub fn directional_derivative(&self, direction: usize) -> Result<MetricField> {
        if direction >= self.dim {
            return Err(Error::InvalidInput(format!(
                "direction {direction} out of range for dimension {}",
                self.dim
            )));
        }
        let this = self.clone();
        let value = move |x: &[f64]| this.partial(x, direction).map(symmetrize);
        Ok(MetricField::fallible(self.dim, value))
    }

    /// Pullback `Jᵀ g(φ(x)) J` along a coordinate change `φ` with Jacobian `J`.
    pub fn pullback(&self, map: VectorFn, jacobian: MatrixFn) -> MetricField {
        let this = self.clone();
        let dim = self.dim;
        MetricField::fallible(dim, move |x| {
            let j = jacobian(x)?;
            let y = map(x);
            Ok(symmetrize(j.transpose() * this.value(&y)? * j))
        })
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Where a potential is defined and positive.
#[derive(Clone)]
pub enum Domain {
    Everywhere,
    PositiveOrthant,
    Custom(Arc<dyn Fn(&[f64]) -> bool + Send + Sync>),
}

impl Domain {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::Everywhere => x.iter().all(|v| v.is_finite()),
            Domain::PositiveOrthant => x.iter().all(|&v| v > 0.0 && v.is_finite()),
            Domain::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Everywhere => f.write_str("Everywhere"),
            Domain::PositiveOrthant => f.write_str("PositiveOrthant"),
            Domain::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// A scalar field with optional analytic derivatives up to order three.
///
/// Missing derivatives fall back to finite differences: second-order
/// stencils for gradient and Hessian, fourth-order nested stencils for the
/// third-derivative tensor.
#[derive(Clone)]
pub struct PotentialField {
    dim: usize,
    value: ScalarFn,
    domain: Domain,
    gradient: Option<VectorFn>,
    hessian: Option<Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>>,
    /// Flattened `n³` tensor, index `[a*n*n + b*n + c]`.
    third: Option<VectorFn>,
}

impl fmt::Debug for PotentialField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialField")
            .field("dim", &self.dim)
            .field("domain", &self.domain)
            .field("analytic_gradient", &self.gradient.is_some())
            .field("analytic_hessian", &self.hessian.is_some())
            .field("analytic_third", &self.third.is_some())
            .finish()
    }
}

impl PotentialField {
    pub fn new<F>(dim: usize, value: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            dim,
            value: Arc::new(value),
            domain: Domain::Everywhere,
            gradient: None,
            hessian: None,
            third: None,
        }
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_gradient<F>(mut self, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(f));
        self
    }

    pub fn with_hessian<F>(mut self, f: F) -> Self
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.hessian = Some(Arc::new(f));
        self
    }

    pub fn with_third<F>(mut self, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.third = Some(Arc::new(f));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn has_analytic_third(&self) -> bool {
        self.third.is_some()
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        check_len(self.dim, x.len())?;
        if !self.domain.contains(x) {
            return Err(Error::DomainViolation { point: x.to_vec(), reason: "outside potential domain".into() });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok((self.value)(x))
    }

    /// Evaluates without the domain check (used inside difference stencils).
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        Ok(match &self.gradient {
            Some(g) => g(x),
            None => fd::gradient(|y| (self.value)(y), x),
        })
    }

    pub fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        Ok(match &self.hessian {
            Some(h) => h(x),
            None => fd::hessian(|y| (self.value)(y), x),
        })
    }

    pub fn third_derivatives(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        Ok(match &self.third {
            Some(t) => t(x),
            None => fd::third_derivatives(&|y: &[f64]| (self.value)(y), x),
        })
    }

    /// `φ + ½xᵀAx + b·x + c`. Analytic derivatives carry over; third
    /// derivatives are unchanged.
    pub fn plus_quadratic(&self, a: DMatrix<f64>, b: Vec<f64>, c: f64) -> Result<PotentialField> {
        check_len(self.dim, a.nrows())?;
        check_len(self.dim, a.ncols())?;
        check_len(self.dim, b.len())?;
        let a = (&a + a.transpose()) * 0.5;
        let quad = {
            let (a, b) = (a.clone(), b.clone());
            move |x: &[f64]| {
                let v = nalgebra::DVector::from_column_slice(x);
                0.5 * v.dot(&(&a * &v)) + b.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() + c
            }
        };
        let base = self.value.clone();
        let mut out = self.clone();
        out.value = Arc::new(move |x| base(x) + quad(x));
        if let Some(g) = self.gradient.clone() {
            let (a, b) = (a.clone(), b.clone());
            out.gradient = Some(Arc::new(move |x| {
                let ax = &a * nalgebra::DVector::from_column_slice(x);
                g(x).iter().zip(ax.iter()).zip(&b).map(|((g, q), l)| g + q + l).collect()
            }));
        }
        if let Some(h) = self.hessian.clone() {
            out.hessian = Some(Arc::new(move |x| h(x) + &a));
        }
        Ok(out)
    }

    /// `ln φ`, with analytic derivatives by the chain rule whenever `φ`
    /// carries all three analytic derivatives.
    pub fn ln(&self) -> PotentialField {
        let phi = self.clone();
        let n = self.dim;
        let inner = phi.clone();
        let mut out = PotentialField::new(n, move |x| (inner.value)(x).ln()).with_domain(self.domain.clone());
        if let (Some(grad), Some(hess), Some(third)) = (&self.gradient, &self.hessian, &self.third) {
            let (v1, g1) = (phi.value.clone(), grad.clone());
            out.gradient = Some(Arc::new(move |x| {
                let f = v1(x);
                g1(x).into_iter().map(|d| d / f).collect()
            }));
            let (v2, g2, h2) = (phi.value.clone(), grad.clone(), hess.clone());
            out.hessian = Some(Arc::new(move |x| {
                let f = v2(x);
                let g = g2(x);
                let h = h2(x);
                DMatrix::from_fn(n, n, |i, j| h[(i, j)] / f - g[i] * g[j] / (f * f))
            }));
            let (v3, g3, h3, t3) = (phi.value.clone(), grad.clone(), hess.clone(), third.clone());
            out.third = Some(Arc::new(move |x| {
                let f = v3(x);
                let g = g3(x);
                let h = h3(x);
                let t = t3(x);
                let mut out = vec![0.0; n * n * n];
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            let idx = i * n * n + j * n + k;
                            out[idx] = t[idx] / f
                                - (h[(i, j)] * g[k] + h[(i, k)] * g[j] + h[(j, k)] * g[i]) / (f * f)
                                + 2.0 * g[i] * g[j] * g[k] / (f * f * f);
                        }
                    }
                }
                out
            }));
        }
        out
    }
}

/// Connection coefficients `Γ^i_jk`, flattened as `[i*n*n + j*n + k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim * dim] }
    }

    pub fn from_fn<F: Fn(usize, usize, usize) -> f64>(dim: usize, f: F) -> Self {
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    out.data[i * dim * dim + j * dim + k] = f(i, j, k);
                }
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[i * self.dim * self.dim + j * self.dim + k]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// `max |Γ^i_jk - Γ^i_kj|`, the torsion of the connection.
    pub fn torsion(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((self.get(i, j, k) - self.get(i, k, j)).abs());
                }
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `(Γ(a, b))^i = Γ^i_jk a^j b^k`
    pub fn contract(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..n {
                    for k in 0..n {
                        acc += self.get(i, j, k) * a[j] * b[k];
                    }
                }
                acc
            })
            .collect()
    }

    fn combine(&self, other: &Self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + s * b).collect(),
        }
    }
}

/// Levi-Civita connection
/// `Γ^i_jk = ½ g^il (∂_j g_lk + ∂_k g_jl - ∂_l g_jk)`.
pub fn christoffel(metric: &MetricField, x: &[f64]) -> Result<Christoffel> {
    let n = metric.dim();
    let ginv = metric.inverse(x)?;
    let dg = metric.partials(x)?;
    // first kind Γ_{l,jk}, computed for j <= k and mirrored
    let mut first = vec![0.0; n * n * n];
    for l in 0..n {
        for j in 0..n {
            for k in j..n {
                let v = 0.5 * (dg[j][(l, k)] + dg[k][(j, l)] - dg[l][(j, k)]);
                first[l * n * n + j * n + k] = v;
                first[l * n * n + k * n + j] = v;
            }
        }
    }
    let mut out = Christoffel::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in j..n {
                let v: f64 = (0..n).map(|l| ginv[(i, l)] * first[l * n * n + j * n + k]).sum();
                out.data[i * n * n + j * n + k] = v;
                out.data[i * n * n + k * n + j] = v;
            }
        }
    }
    Ok(out)
}

/// Riemann tensor of an arbitrary connection field at `x`, flattened as
/// `[i*n³ + j*n² + k*n + l]`. Derivatives of `Γ` use fourth-order central
/// differences with the second-derivative step.
pub fn riemann<F>(connection: F, x: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Christoffel>,
{
    let n = x.len();
    let gamma = connection(x)?;
    check_len(n, gamma.dim())?;
    // dgamma[k] = ∂_k Γ
    let mut dgamma = Vec::with_capacity(n);
    for k in 0..n {
        let h = fd::scaled_step(SECOND_STEP, x[k]);
        let at = |offset: f64| {
            let mut y = x.to_vec();
            y[k] += offset * h;
            connection(&y)
        };
        let near = at(1.0)?.combine(&at(-1.0)?, -1.0);
        let far = at(2.0)?.combine(&at(-2.0)?, -1.0);
        let d = near.data.iter().zip(&far.data).map(|(a, b)| (8.0 * a - b) / (12.0 * h)).collect::<Vec<_>>();
        dgamma.push(d);
    }
    let g = |i: usize, j: usize, k: usize| gamma.get(i, j, k);
    let dg = |k: usize, i: usize, j: usize, l: usize| dgamma[k][i * n * n + j * n + l];
    let mut r = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = dg(k, i, l, j) - dg(l, i, k, j);
                    for m in 0..n {
                        v += g(i, k, m) * g(m, l, j) - g(i, l, m) * g(m, k, j);
                    }
                    r[((i * n + j) * n + k) * n + l] = v;
                }
            }
        }
    }
    Ok(r)
}

/// Largest curvature component of a connection field over a sample set.
pub fn connection_curvature<F>(connection: F, samples: &[Vec<f64>]) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<Christoffel>,
{
    let mut worst: f64 = 0.0;
    for x in samples {
        let r = riemann(&connection, x)?;
        worst = r.iter().fold(worst, |a, v| a.max(v.abs()));
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    /// `max |R^i_jkl| / max(1, max |g_ij|)` over the samples.
    pub riemann_max_abs: f64,
    /// `max |Γ^i_jk - Γ^i_kj|` of the Levi-Civita symbols.
    pub torsion_max_abs: f64,
    pub tolerance: f64,
    pub flat: bool,
}

/// Flatness and torsion residuals of the Levi-Civita connection of `metric`.
pub fn curvature_flatness(metric: &MetricField, samples: &[Vec<f64>], tolerance: f64) -> Result<CurvatureReport> {
    let mut riemann_max: f64 = 0.0;
    let mut torsion: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for x in samples {
        scale = scale.max(metric.value(x)?.amax());
        torsion = torsion.max(christoffel(metric, x)?.torsion());
        let r = riemann(|y| christoffel(metric, y), x)?;
        riemann_max = r.iter().fold(riemann_max, |a, v| a.max(v.abs()));
    }
    let riemann_max_abs = riemann_max / scale;
    Ok(CurvatureReport {
        riemann_max_abs,
        torsion_max_abs: torsion,
        tolerance,
        flat: riemann_max_abs <= tolerance,
    })
}

/// `max |∇_k g_ij|` for the Levi-Civita connection at `x`.
pub fn metric_compatibility_residual(metric: &MetricField, x: &[f64]) -> Result<f64> {
    let n = metric.dim();
    let g = metric.value(x)?;
    let dg = metric.partials(x)?;
    let gamma = christoffel(metric, x)?;
    let mut worst: f64 = 0.0;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut v = dg[k][(i, j)];
                for l in 0..n {
                    v -= gamma.get(l, k, i) * g[(l, j)] + gamma.get(l, k, j) * g[(i, l)];
                }
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

/// The Hessian metric `g_ij = ∂_i ∂_j ln φ`, differentiated through the third
/// derivatives of `ln φ`.
pub fn hessian_log_metric(phi: &PotentialField) -> MetricField {
    let n = phi.dim();
    let log_phi = phi.ln();
    let positivity = {
        let phi = phi.clone();
        move |x: &[f64]| -> Result<()> {
            let v = phi.eval(x)?;
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::NonPositivePotential { value: v, point: x.to_vec() })
            }
        }
    };
    let value = {
        let (log_phi, positivity) = (log_phi.clone(), positivity.clone());
        move |x: &[f64]| {
            positivity(x)?;
            log_phi.hessian(x).map(symmetrize)
        }
    };
    let partial = move |x: &[f64], k: usize| -> Result<DMatrix<f64>> {
        positivity(x)?;
        let t = log_phi.third_derivatives(x)?;
        Ok(DMatrix::from_fn(n, n, |i, j| t[i * n * n + j * n + k]))
    };
    MetricField {
        dim: n,
        value: Arc::new(value),
        derivative: Differentiation::Analytic(Arc::new(partial)),
    }
}

/// Structure constants `c^i_jk = -Γ^i_jk(x)` of the tangent multiplication of
/// a cone with characteristic function `φ`.
pub fn cone_structure(phi: &PotentialField, x: &[f64]) -> Result<Christoffel> {
    let gamma = christoffel(&hessian_log_metric(phi), x)?;
    Ok(Christoffel { dim: gamma.dim, data: gamma.data.iter().map(|v| -v).collect() })
}

/// `(a∘b)^i = -Γ^i_jk(x) a^j b^k`
pub fn cone_multiply(phi: &PotentialField, x: &[f64], a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    check_len(phi.dim(), a.len())?;
    check_len(phi.dim(), b.len())?;
    Ok(cone_structure(phi, x)?.contract(a, b))
}

/// `max_x |ln φ(Ax) - ln φ(x) + ln det A|`; zero when `A` is an automorphism
/// of the cone.
pub fn automorphism_invariance_residual(phi: &PotentialField, a: &DMatrix<f64>, samples: &[Vec<f64>]) -> Result<f64> {
    let n = phi.dim();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: a.nrows() });
    }
    let det = a.determinant();
    if !(det > 0.0) {
        return Err(Error::InvalidInput(format!("automorphism must have positive determinant, got {det}")));
    }
    let mut worst: f64 = 0.0;
    for x in samples {
        check_len(n, x.len())?;
        let ax: Vec<f64> = (a * nalgebra::DVector::from_column_slice(x)).iter().copied().collect();
        if !phi.domain().contains(&ax) {
            return Err(Error::DomainViolation { point: ax, reason: "A·x leaves the cone".into() });
        }
        let (fx, fax) = (phi.eval(x)?, phi.eval(&ax)?);
        for (v, p) in [(fx, x.clone()), (fax, ax.clone())] {
            if !(v > 0.0) {
                return Err(Error::NonPositivePotential { value: v, point: p });
            }
        }
        worst = worst.max((fax.ln() - fx.ln() + det.ln()).abs());
    }
    Ok(worst)
}

/// The α = ±1 connections of an exponential family and their residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualConnections {
    pub levi_civita: Christoffel,
    /// `Γ^LC - ½ g⁻¹T`
    pub exponential: Christoffel,
    /// `Γ^LC + ½ g⁻¹T`
    pub mixture: Christoffel,
    /// `max |∂_k g_ij - (Γ^e_{ki,j} + Γ^m_{kj,i})|`, with `∂g` by differences.
    pub duality_residual: f64,
    pub exponential_curvature: f64,
    pub mixture_curvature: f64,
}

/// Fisher metric of a family as a field on `β`, with `∂_k g_ij = T_ijk`.
pub fn fisher_metric(fam: &ExponentialFamily) -> MetricField {
    let n = fam.dim();
    let (f1, f2) = (fam.clone(), fam.clone());
    MetricField::fallible(n, move |b| f1.metric(b)).with_differentiation(Differentiation::Analytic(Arc::new(
        move |b, k| {
            let t = f2.cumulant_tensor(b, 3)?;
            Ok(DMatrix::from_fn(n, n, |i, j| t.get(&[i, j, k])))
        },
    )))
}

fn alpha_connections(fam: &ExponentialFamily, beta: &[f64]) -> Result<(Christoffel, Christoffel, Christoffel)> {
    let n = fam.dim();
    let metric = fisher_metric(fam);
    let lc = christoffel(&metric, beta)?;
    let ginv = metric.inverse(beta)?;
    let t = fam.cumulant_tensor(beta, 3)?;
    let raised = Christoffel::from_fn(n, |i, j, k| 0.5 * (0..n).map(|l| ginv[(i, l)] * t.get(&[l, j, k])).sum::<f64>());
    Ok((lc.combine(&raised, -1.0), lc.combine(&raised, 1.0), lc))
}

pub fn dual_connections(fam: &ExponentialFamily, beta: &[f64]) -> Result<DualConnections> {
    let n = fam.dim();
    let condition = linalg::condition_number(&fam.metric(beta)?);
    if !(condition <= statmanifold::MAX_CONDITION) {
        return Err(Error::DegenerateMetric { condition });
    }
    let (exponential, mixture, levi_civita) = alpha_connections(fam, beta)?;
    let g = fam.metric(beta)?;
    let lower = |c: &Christoffel, k: usize, i: usize, j: usize| (0..n).map(|l| g[(j, l)] * c.get(l, k, i)).sum::<f64>();
    let mut duality: f64 = 0.0;
    for k in 0..n {
        let h = fd::scaled_step(FIRST_STEP, beta[k]);
        let mut bp = beta.to_vec();
        let mut bm = beta.to_vec();
        bp[k] += h;
        bm[k] -= h;
        let dg = (fam.metric(&bp)? - fam.metric(&bm)?) / (2.0 * h);
        for i in 0..n {
            for j in 0..n {
                let r = dg[(i, j)] - (lower(&exponential, k, i, j) + lower(&mixture, k, j, i));
                duality = duality.max(r.abs());
            }
        }
    }
    let samples = [beta.to_vec()];
    let exponential_curvature = connection_curvature(|b| alpha_connections(fam, b).map(|c| c.0), &samples)?;
    let mixture_curvature = connection_curvature(|b| alpha_connections(fam, b).map(|c| c.1), &samples)?;
    Ok(DualConnections {
        levi_civita,
        exponential,
        mixture,
        duality_residual: duality,
        exponential_curvature,
        mixture_curvature,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PencilReport {
    pub direction: usize,
    /// Curvature residual of `g` (read as contravariant).
    pub metric_residual: f64,
    /// Curvature residual of `g₂ = ∂g/∂x^direction`.
    pub derivative_residual: f64,
    /// `(λ, residual of g + λ g₂)` per sampled `λ`.
    pub combination_residuals: Vec<(f64, f64)>,
    pub tolerance: f64,
    pub passed: bool,
}

impl PencilReport {
    pub fn max_residual(&self) -> f64 {
        self.combination_residuals
            .iter()
            .map(|(_, r)| *r)
            .fold(self.metric_residual.max(self.derivative_residual), f64::max)
    }
}

/// Checks that `g^ij`, `g₂^ij = ∂g^ij/∂x^direction` and every sampled
/// `g + λ g₂` are flat.
pub fn flat_pencil_check(
    contravariant: &MetricField,
    direction: usize,
    lambdas: &[f64],
    samples: &[Vec<f64>],
    tolerance: f64,
) -> Result<PencilReport> {
    let n = contravariant.dim();
    let g2 = contravariant.directional_derivative(direction)?;
    for x in samples {
        let m = g2.value(x)?;
        let det = m.determinant();
        let scale = m.amax().max(1.0).powi(n as i32);
        if det.abs() <= 1e-12 * scale {
            return Err(Error::DegeneratePencil { det });
        }
    }
    let residual = |field: &MetricField| -> Result<f64> {
        Ok(curvature_flatness(&field.inverted(), samples, tolerance)?.riemann_max_abs)
    };
    let metric_residual = residual(contravariant)?;
    let derivative_residual = residual(&g2)?;
    let mut combination_residuals = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let combo = contravariant.linear_combination(lambda, &g2)?;
        combination_residuals.push((lambda, residual(&combo)?));
    }
    let mut report = PencilReport {
        direction,
        metric_residual,
        derivative_residual,
        combination_residuals,
        tolerance,
        passed: false,
    };
    report.passed = report.max_residual() <= tolerance;
    Ok(report)
}

/// Characteristic function `φ(x) = Π 1/x_i` of the positive orthant, with
/// analytic derivatives.
pub fn orthant_potential(n: usize) -> PotentialField {
    let value = |x: &[f64]| x.iter().map(|v| 1.0 / v).product::<f64>();
    PotentialField::new(n, value)
        .with_domain(Domain::PositiveOrthant)
        .with_gradient(move |x| {
            let f = value(x);
            x.iter().map(|v| -f / v).collect()
        })
        .with_hessian(move |x| {
            let f = value(x);
            DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    2.0 * f / (x[i] * x[i])
                } else {
                    f / (x[i] * x[j])
                }
            })
        })
        .with_third(move |x| {
            let f = value(x);
            let mut t = vec![0.0; n * n * n];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        // ∂_i ∂_j ∂_k Π x_m^{-1} = -f · Π over distinct indices of (multiplicity factor / x)
                        let mut counts = vec![0u32; n];
                        counts[i] += 1;
                        counts[j] += 1;
                        counts[k] += 1;
                        let mut v = -f;
                        for (m, &c) in counts.iter().enumerate() {
                            // ∂^c x^{-1} = (-1)^c c! x^{-1-c}; the sign is folded into the leading -1
                            let fact = match c {
                                0 => 1.0,
                                1 => 1.0,
                                2 => 2.0,
                                _ => 6.0,
                            };
                            v *= fact / x[m].powi(c as i32);
                        }
                        t[i * n * n + j * n + k] = v;
                    }
                }
            }
            t
        })
}
