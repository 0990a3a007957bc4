use thiserror::Error;

/// Errors raised by the constructions in this crate.
///
/// Failing identities are never errors: residual checks report numbers and
/// leave the pass/fail decision to the caller. These variants cover inputs
/// on which a construction is undefined.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("paracomplex number {re} + {im}e lies on the null cone and has no inverse")]
    ZeroDivisor { re: f64, im: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("metric is degenerate (condition number {condition:e})")]
    DegenerateMetric { condition: f64 },

    #[error("potential must be strictly positive, got {value} at {point:?}")]
    NonPositivePotential { value: f64, point: Vec<f64> },

    #[error("point {point:?} leaves the domain: {reason}")]
    DomainViolation { point: Vec<f64>, reason: String },

    #[error("pencil derivative metric is degenerate (|det| = {det:e})")]
    DegeneratePencil { det: f64 },

    #[error("two-form is degenerate at the probed point")]
    DegenerateForm,

    #[error("two-form is not antisymmetric (residual {residual:e})")]
    NotAntisymmetric { residual: f64 },

    #[error("matrix K does not define a paracomplex structure: {reason}")]
    InvalidStructure { reason: String },

    #[error("implicit solver did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
