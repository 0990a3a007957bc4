//! The rank-2 split algebra `ℝ + eℝ` with `e² = 1`.
//!
//! Besides the usual `{1, e}` basis the algebra has the idempotent basis
//! `e₊ = (1 + e)/2`, `e₋ = (1 - e)/2` in which multiplication is
//! componentwise. Conjugation swaps the two idempotent components; it is the
//! Peirce reflection of the pair `(e₊, e₋)`.
//!
//! `Im(x + ey)` is the `e`-coefficient `y`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Relative threshold below which `re² - im²` counts as zero.
pub const ZERO_DIVISOR_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ParaNumber {
    pub re: f64,
    pub im: f64,
}

impl ParaNumber {
    pub const ZERO: ParaNumber = ParaNumber { re: 0.0, im: 0.0 };
    pub const ONE: ParaNumber = ParaNumber { re: 1.0, im: 0.0 };
    pub const E: ParaNumber = ParaNumber { re: 0.0, im: 1.0 };
    /// `(1 + e)/2`
    pub const E_PLUS: ParaNumber = ParaNumber { re: 0.5, im: 0.5 };
    /// `(1 - e)/2`
    pub const E_MINUS: ParaNumber = ParaNumber { re: 0.5, im: -0.5 };

    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub const fn real(re: f64) -> Self {
        Self { re, im: 0.0 }
    }

    pub fn conj(self) -> Self {
        Self::new(self.re, -self.im)
    }

    /// `z·z̄ = re² - im²`. Indefinite; vanishes exactly on the zero divisors.
    pub fn norm_sq(self) -> f64 {
        self.re * self.re - self.im * self.im
    }

    pub fn is_zero_divisor(self) -> bool {
        let scale = (self.re * self.re + self.im * self.im).max(1.0);
        self.norm_sq().abs() <= ZERO_DIVISOR_THRESHOLD * scale
    }

    pub fn inverse(self) -> Result<Self> {
        if self.is_zero_divisor() {
            return Err(Error::ZeroDivisor { re: self.re, im: self.im });
        }
        // Componentwise reciprocal in idempotent coordinates.
        let IdempotentCoords { plus, minus } = self.decompose();
        Ok(IdempotentCoords::new(1.0 / plus, 1.0 / minus).recompose())
    }

    pub fn decompose(self) -> IdempotentCoords {
        IdempotentCoords { plus: self.re + self.im, minus: self.re - self.im }
    }

    /// Swaps the `e₊` and `e₋` components. Agrees with [`ParaNumber::conj`].
    pub fn peirce_reflect(self) -> Self {
        let IdempotentCoords { plus, minus } = self.decompose();
        IdempotentCoords::new(minus, plus).recompose()
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.re * s, self.im * s)
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl fmt::Display for ParaNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im < 0.0 {
            write!(f, "{} - {}e", self.re, -self.im)
        } else {
            write!(f, "{} + {}e", self.re, self.im)
        }
    }
}

impl Add for ParaNumber {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for ParaNumber {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Neg for ParaNumber {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }
}

impl Mul for ParaNumber {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.re * rhs.re + self.im * rhs.im,
            self.re * rhs.im + self.im * rhs.re,
        )
    }
}

impl Mul<f64> for ParaNumber {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale(rhs)
    }
}

impl std::iter::Sum for ParaNumber {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |a, b| a + b)
    }
}

/// Coordinates in the idempotent basis: `z = plus·e₊ + minus·e₋`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IdempotentCoords {
    pub plus: f64,
    pub minus: f64,
}

impl IdempotentCoords {
    pub const fn new(plus: f64, minus: f64) -> Self {
        Self { plus, minus }
    }

    pub fn recompose(self) -> ParaNumber {
        ParaNumber::new(0.5 * (self.plus + self.minus), 0.5 * (self.plus - self.minus))
    }

    pub fn mul(self, other: Self) -> Self {
        Self::new(self.plus * other.plus, self.minus * other.minus)
    }
}

impl From<ParaNumber> for IdempotentCoords {
    fn from(z: ParaNumber) -> Self {
        z.decompose()
    }
}

impl From<IdempotentCoords> for ParaNumber {
    fn from(c: IdempotentCoords) -> Self {
        c.recompose()
    }
}

/// A point `(z¹, …, zⁿ)` of paracomplex space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParaVector(Vec<ParaNumber>);

impl ParaVector {
    pub fn new(components: Vec<ParaNumber>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput("paracomplex vector must have length >= 1".into()));
        }
        Ok(Self(components))
    }

    /// Builds `z^k = x^k + e y^k`.
    pub fn from_parts(x: &[f64], y: &[f64]) -> Result<Self> {
        check_len(x.len(), y.len())?;
        Self::new(x.iter().zip(y).map(|(&a, &b)| ParaNumber::new(a, b)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn components(&self) -> &[ParaNumber] {
        &self.0
    }

    pub fn scale(&self, s: ParaNumber) -> Self {
        Self(self.0.iter().map(|&z| s * z).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(Self(self.0.iter().zip(&other.0).map(|(&a, &b)| a + b).collect()))
    }
}

/// `⟨ξ, η⟩ = Σ_jk g_jk ξ^j conj(η^k)` for a real symmetric `g`.
pub fn hermitian_product(g: &DMatrix<f64>, xi: &ParaVector, eta: &ParaVector) -> Result<ParaNumber> {
    let n = xi.len();
    check_len(n, eta.len())?;
    check_len(n, g.nrows())?;
    check_len(n, g.ncols())?;
    let mut acc = ParaNumber::ZERO;
    for (j, &xj) in xi.components().iter().enumerate() {
        for (k, &ek) in eta.components().iter().enumerate() {
            acc = acc + (xj * ek.conj()).scale(g[(j, k)]);
        }
    }
    Ok(acc)
}

/// An endomorphism `K` of `ℝ^{2m}` with `K² = I` and equal-dimensional
/// `±1` eigenspaces, stored as an explicit matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ParaStructure {
    k: DMatrix<f64>,
}

impl ParaStructure {
    pub const TOLERANCE: f64 = 1e-12;

    pub fn new(k: DMatrix<f64>) -> Result<Self> {
        let d = k.nrows();
        if d != k.ncols() || d == 0 || d % 2 != 0 {
            return Err(Error::InvalidStructure {
                reason: format!("expected an even-dimensional square matrix, got {}x{}", k.nrows(), k.ncols()),
            });
        }
        let sq = &k * &k - DMatrix::<f64>::identity(d, d);
        let res = sq.amax();
        if res > Self::TOLERANCE {
            return Err(Error::InvalidStructure { reason: format!("|K² - I| = {res:e}") });
        }
        // For an involution the trace counts dim E⁺ - dim E⁻.
        let tr = k.trace();
        if tr.abs() > 0.5 {
            return Err(Error::InvalidStructure { reason: format!("eigenspaces unbalanced, tr K = {tr}") });
        }
        Ok(Self { k })
    }

    /// Multiplication by `e` on realified coordinates `(x¹…xᵐ, y¹…yᵐ)`:
    /// `e(x + ey) = y + ex`.
    pub fn realified(m: usize) -> Self {
        let mut k = DMatrix::zeros(2 * m, 2 * m);
        for i in 0..m {
            k[(i, m + i)] = 1.0;
            k[(m + i, i)] = 1.0;
        }
        Self { k }
    }

    /// The same structure in adapted coordinates `(z₊, z₋)`: `diag(I, -I)`.
    pub fn adapted(m: usize) -> Self {
        let mut k = DMatrix::identity(2 * m, 2 * m);
        for i in m..2 * m {
            k[(i, i)] = -1.0;
        }
        Self { k }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn dim(&self) -> usize {
        self.k.nrows()
    }

    pub fn involution_residual(&self) -> f64 {
        let d = self.dim();
        (&self.k * &self.k - DMatrix::<f64>::identity(d, d)).amax()
    }

    /// Projector onto `E⁺` (`s = 1`) or `E⁻` (`s = -1`): `(I ± K)/2`.
    pub fn projector(&self, plus: bool) -> DMatrix<f64> {
        let d = self.dim();
        let s = if plus { 1.0 } else { -1.0 };
        (DMatrix::<f64>::identity(d, d) + &self.k * s) * 0.5
    }
}
