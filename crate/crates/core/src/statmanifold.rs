//! Finite exponential families.
//!
//! A family is a table of sufficient statistics `X_j(ω)` over a finite sample
//! space with positive base weights `μ₀(ω)`. Its potential is the
//! log-partition function
//!
//! ```text
//! Φ(β) = ln Σ_ω μ₀(ω) exp(-Σ_j β^j X_j(ω))
//! ```
//!
//! whose derivatives are, up to sign, the cumulants of `X` under the Gibbs
//! density: `∂^k Φ = (-1)^k κ_k`. All moments are exact sums over the sample
//! space.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg;

/// Largest condition number accepted for the Fisher metric.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialFamily {
    /// `n × m`, entry `(j, ω)` is `X_j(ω)`.
    statistics: DMatrix<f64>,
    base: Vec<f64>,
}

impl ExponentialFamily {
    /// Family with unit base weights. `rows[j][ω] = X_j(ω)`.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        Self::with_base(rows, vec![1.0; m])
    }

    pub fn with_base(rows: &[Vec<f64>], base: Vec<f64>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidInput("exponential family needs at least one statistic".into()));
        }
        let m = rows[0].len();
        if m == 0 {
            return Err(Error::InvalidInput("sample space must be non-empty".into()));
        }
        for row in rows {
            check_len(m, row.len())?;
        }
        check_len(m, base.len())?;
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("statistics must be finite".into()));
        }
        if base.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput("base weights must be finite and strictly positive".into()));
        }
        let statistics = DMatrix::from_fn(n, m, |j, w| rows[j][w]);
        Ok(Self { statistics, base })
    }

    /// Bernoulli family: `Ω = {0, 1}`, `X₁(ω) = ω`.
    pub fn bernoulli() -> Self {
        Self::new(&[vec![0.0, 1.0]]).expect("valid fixture")
    }

    /// Categorical family on three outcomes with indicator statistics of the
    /// last two.
    pub fn categorical3() -> Self {
        Self::new(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).expect("valid fixture")
    }

    /// Number of statistics `n` (the manifold dimension).
    pub fn dim(&self) -> usize {
        self.statistics.nrows()
    }

    /// Size of the sample space `m`.
    pub fn sample_size(&self) -> usize {
        self.statistics.ncols()
    }

    pub fn statistic(&self, j: usize, omega: usize) -> f64 {
        self.statistics[(j, omega)]
    }

    pub fn base_weights(&self) -> &[f64] {
        &self.base
    }

    pub fn statistics(&self) -> &DMatrix<f64> {
        &self.statistics
    }

    /// Same family with every base weight multiplied by `c`.
    pub fn scale_base(&self, c: f64) -> Result<Self> {
        let rows = self.rows();
        Self::with_base(&rows, self.base.iter().map(|w| w * c).collect())
    }

    /// Same family with `X_j` replaced by `X_j + c`.
    pub fn shift_statistic(&self, j: usize, c: f64) -> Result<Self> {
        let mut rows = self.rows();
        rows[j].iter_mut().for_each(|v| *v += c);
        Self::with_base(&rows, self.base.clone())
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|j| self.statistics.row(j).iter().copied().collect())
            .collect()
    }

    /// Exponents `ln μ₀(ω) - ⟨β, X(ω)⟩`.
    fn log_weights(&self, beta: &[f64]) -> Vec<f64> {
        (0..self.sample_size())
            .map(|w| {
                let dot: f64 = (0..self.dim()).map(|j| beta[j] * self.statistics[(j, w)]).sum();
                self.base[w].ln() - dot
            })
            .collect()
    }

    fn check_beta(&self, beta: &[f64]) -> Result<()> {
        check_len(self.dim(), beta.len())
    }

    /// The potential `Φ(β)`, by log-sum-exp with a max shift.
    pub fn potential(&self, beta: &[f64]) -> Result<f64> {
        self.check_beta(beta)?;
        Ok(log_sum_exp(&self.log_weights(beta)))
    }

    /// Normalized weights `μ₀(ω) e^{-⟨β, X(ω)⟩} / e^{Φ(β)}`.
    pub fn gibbs_density(&self, beta: &[f64]) -> Result<Vec<f64>> {
        self.check_beta(beta)?;
        let lw = self.log_weights(beta);
        let lse = log_sum_exp(&lw);
        Ok(lw.iter().map(|l| (l - lse).exp()).collect())
    }

    /// `E[X_j]` under the Gibbs density.
    pub fn mean(&self, beta: &[f64]) -> Result<Vec<f64>> {
        let p = self.gibbs_density(beta)?;
        Ok((0..self.dim())
            .map(|j| p.iter().enumerate().map(|(w, pw)| pw * self.statistics[(j, w)]).sum())
            .collect())
    }

    /// The order-`k` derivative tensor of `Φ` at `β`, for `k` in `1..=4`.
    pub fn cumulant_tensor(&self, beta: &[f64], order: usize) -> Result<CumulantTensor> {
        if !(1..=4).contains(&order) {
            return Err(Error::InvalidInput(format!("cumulant order {order} outside 1..=4")));
        }
        let n = self.dim();
        let m = self.sample_size();
        let p = self.gibbs_density(beta)?;
        let mean: Vec<f64> = (0..n)
            .map(|j| (0..m).map(|w| p[w] * self.statistics[(j, w)]).sum())
            .collect();
        if order == 1 {
            return Ok(CumulantTensor::from_fn(n, 1, |idx| -mean[idx[0]]));
        }
        // centered statistics c[j][ω]
        let c: Vec<Vec<f64>> = (0..n)
            .map(|j| (0..m).map(|w| self.statistics[(j, w)] - mean[j]).collect())
            .collect();
        let moment = |idx: &[usize]| -> f64 {
            (0..m)
                .map(|w| p[w] * idx.iter().map(|&j| c[j][w]).product::<f64>())
                .sum()
        };
        Ok(match order {
            2 => CumulantTensor::from_fn(n, 2, moment),
            3 => CumulantTensor::from_fn(n, 3, |idx| -moment(idx)),
            _ => {
                let cov = DMatrix::from_fn(n, n, |i, j| moment(&[i, j]));
                CumulantTensor::from_fn(n, 4, |idx| {
                    let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
                    moment(idx)
                        - cov[(i, j)] * cov[(k, l)]
                        - cov[(i, k)] * cov[(j, l)]
                        - cov[(i, l)] * cov[(j, k)]
                })
            }
        })
    }

    /// Fisher metric `g_ij = ∂_i ∂_j Φ = Cov(X_i, X_j)`.
    pub fn metric(&self, beta: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.cumulant_tensor(beta, 2)?.to_matrix())
    }

    /// Dual coordinates `η = ∇Φ(β)` and dual potential `ψ = ⟨β, η⟩ - Φ(β)`.
    pub fn dual_coordinates(&self, beta: &[f64]) -> Result<DualCoordinates> {
        let g = self.metric(beta)?;
        let condition = linalg::condition_number(&g);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::DegenerateMetric { condition });
        }
        let eta: Vec<f64> = self.mean(beta)?.into_iter().map(|v| -v).collect();
        let phi = self.potential(beta)?;
        let psi = dot(beta, &eta) - phi;
        Ok(DualCoordinates { eta, psi })
    }

    /// Inverts `η = ∇Φ(β)` by damped Newton iteration from `start`.
    ///
    /// Minimizes the convex function `Φ(β) - ⟨β, η⟩`, backtracking whenever a
    /// full step does not decrease it.
    pub fn beta_from_eta(&self, eta: &[f64], start: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), eta.len())?;
        self.check_beta(start)?;
        const MAX_ITER: usize = 200;
        let objective = |b: &[f64]| -> Result<f64> { Ok(self.potential(b)? - dot(b, eta)) };
        let mut beta = start.to_vec();
        let mut f = objective(&beta)?;
        for _ in 0..MAX_ITER {
            let grad = DVector::from_iterator(
                self.dim(),
                self.mean(&beta)?.iter().zip(eta).map(|(mu, e)| -mu - e),
            );
            if grad.amax() < 1e-14 {
                return Ok(beta);
            }
            let g = self.metric(&beta)?;
            let step = linalg::solve(&g, &grad).ok_or(Error::DegenerateMetric {
                condition: linalg::condition_number(&g),
            })?;
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = beta.iter().zip(step.iter()).map(|(b, s)| b - t * s).collect();
                let ft = objective(&trial)?;
                if ft <= f + 1e-15 * f.abs().max(1.0) || t < 1e-12 {
                    beta = trial;
                    f = ft;
                    break;
                }
                t *= 0.5;
            }
        }
        let residual: f64 = self
            .mean(&beta)?
            .iter()
            .zip(eta)
            .map(|(mu, e)| (-mu - e).abs())
            .fold(0.0, f64::max);
        if residual < 1e-10 {
            Ok(beta)
        } else {
            Err(Error::NonConvergence { iterations: MAX_ITER })
        }
    }

    /// The dual potential as a function of `η`: `ψ(η) = ⟨β(η), η⟩ - Φ(β(η))`.
    pub fn dual_potential(&self, eta: &[f64], start: &[f64]) -> Result<f64> {
        let beta = self.beta_from_eta(eta, start)?;
        Ok(dot(&beta, eta) - self.potential(&beta)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCoordinates {
    pub eta: Vec<f64>,
    pub psi: f64,
}

/// The discrete pairing `⟨μ, f⟩ = Σ_j f^j μ_j`.
pub fn pairing(mu: &[f64], f: &[f64]) -> Result<f64> {
    check_len(mu.len(), f.len())?;
    Ok(dot(mu, f))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// A fully symmetric tensor of order `k` over `ℝⁿ`, stored densely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantTensor {
    order: usize,
    dim: usize,
    data: Vec<f64>,
}

impl CumulantTensor {
    /// Evaluates `f` once per sorted multi-index and copies the value to all
    /// permutations, so symmetry is exact.
    pub fn from_fn<F>(dim: usize, order: usize, f: F) -> Self
    where
        F: Fn(&[usize]) -> f64,
    {
        let len = dim.pow(order as u32);
        let mut data = vec![0.0; len];
        let mut idx = vec![0usize; order];
        let mut sorted = vec![0usize; order];
        let mut cache = std::collections::HashMap::new();
        for flat in 0..len {
            let mut r = flat;
            for slot in idx.iter_mut().rev() {
                *slot = r % dim;
                r /= dim;
            }
            sorted.copy_from_slice(&idx);
            sorted.sort_unstable();
            let v = *cache.entry(sorted.clone()).or_insert_with(|| f(&sorted));
            data[flat] = v;
        }
        Self { order, dim, data }
    }

    /// Wraps raw row-major data; symmetry is the caller's responsibility.
    pub fn from_data(dim: usize, order: usize, data: Vec<f64>) -> Result<Self> {
        check_len(dim.pow(order as u32), data.len())?;
        Ok(Self { order, dim, data })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.order);
        let flat = idx.iter().fold(0, |acc, &i| acc * self.dim + i);
        self.data[flat]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Order-2 tensor as a matrix.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        assert_eq!(self.order, 2, "only order-2 tensors are matrices");
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    /// Largest deviation from full index symmetry.
    pub fn symmetry_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut idx = vec![0usize; self.order];
        for flat in 0..self.data.len() {
            let mut r = flat;
            for slot in idx.iter_mut().rev() {
                *slot = r % self.dim;
                r /= self.dim;
            }
            let mut sorted = idx.clone();
            sorted.sort_unstable();
            worst = worst.max((self.data[flat] - self.get(&sorted)).abs());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_potential() {
        let fam = ExponentialFamily::bernoulli();
        assert!((fam.potential(&[0.0]).unwrap() - 2f64.ln()).abs() < 1e-15);
        let direct = (1.0 + (-1.0f64).exp()).ln();
        assert!((fam.potential(&[1.0]).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn base_scaling_shifts_potential() {
        let fam = ExponentialFamily::categorical3();
        let scaled = fam.scale_base(3.5).unwrap();
        let beta = [0.3, -1.2];
        let d = scaled.potential(&beta).unwrap() - fam.potential(&beta).unwrap();
        assert!((d - 3.5f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(pairing(&[1.0, 0.0], &[3.0, 7.0]).unwrap(), 3.0);
        assert_eq!(pairing(&[0.25; 4], &[5.0; 4]).unwrap(), 5.0);
        assert!((pairing(&[0.2, 0.8], &[1.0, 2.0]).unwrap() - 1.8).abs() < 1e-15);
        assert!(matches!(pairing(&[1.0], &[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn gibbs_examples() {
        let fam = ExponentialFamily::bernoulli();
        assert_eq!(fam.gibbs_density(&[0.0]).unwrap(), vec![0.5, 0.5]);
        let p = fam.gibbs_density(&[50.0]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-20);
        assert!((p[1] - (-50.0f64).exp()).abs() < 1e-30);
        let cat = ExponentialFamily::new(&[vec![0.0, 1.0, 2.0]]).unwrap();
        for v in cat.gibbs_density(&[0.0]).unwrap() {
            assert!((v - 1.0 / 3.0).abs() < 1e-16);
        }
    }

    #[test]
    fn bernoulli_cumulants_at_origin() {
        let fam = ExponentialFamily::bernoulli();
        assert_eq!(fam.cumulant_tensor(&[0.0], 1).unwrap().get(&[0]), -0.5);
        assert_eq!(fam.cumulant_tensor(&[0.0], 2).unwrap().get(&[0, 0]), 0.25);
        assert_eq!(fam.cumulant_tensor(&[0.0], 3).unwrap().get(&[0, 0, 0]), 0.0);
        assert!((fam.cumulant_tensor(&[0.0], 4).unwrap().get(&[0, 0, 0, 0]) + 0.125).abs() < 1e-16);
        assert!(fam.cumulant_tensor(&[0.0], 5).is_err());
    }

    #[test]
    fn cumulants_are_symmetric() {
        let fam = ExponentialFamily::new(&[vec![0.0, 1.0, 3.0, -1.0], vec![2.0, 0.5, 0.0, 1.0]]).unwrap();
        for k in 1..=4 {
            assert_eq!(fam.cumulant_tensor(&[0.2, -0.4], k).unwrap().symmetry_residual(), 0.0);
        }
    }

    #[test]
    fn dual_coordinates_bernoulli() {
        let fam = ExponentialFamily::bernoulli();
        let d = fam.dual_coordinates(&[0.0]).unwrap();
        assert_eq!(d.eta, vec![-0.5]);
        assert!((d.psi + 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_metric_rejected() {
        // constant statistic: zero variance
        let fam = ExponentialFamily::new(&[vec![1.0, 1.0]]).unwrap();
        assert!(matches!(fam.dual_coordinates(&[0.0]), Err(Error::DegenerateMetric { .. })));
    }

    #[test]
    fn legendre_round_trip() {
        let fam = ExponentialFamily::categorical3();
        let beta = [0.7, -1.3];
        let eta = fam.dual_coordinates(&beta).unwrap().eta;
        let back = fam.beta_from_eta(&eta, &[0.0, 0.0]).unwrap();
        for (a, b) in back.iter().zip(beta) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn invalid_families() {
        assert!(ExponentialFamily::new(&[]).is_err());
        assert!(ExponentialFamily::new(&[vec![]]).is_err());
        assert!(ExponentialFamily::with_base(&[vec![0.0, 1.0]], vec![1.0, 0.0]).is_err());
        assert!(ExponentialFamily::new(&[vec![0.0, f64::NAN]]).is_err());
    }
}
