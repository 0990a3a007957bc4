//! Constructions and residual checks for Frobenius, Hessian, paracomplex,
//! symplectic and Poisson structures on finite-dimensional statistical
//! manifolds.
//!
//! Every identity is checked numerically: functions return residuals and the
//! caller compares them against a tolerance.

pub mod error;
pub mod fd;
pub mod frobenius;
pub mod geometry;
pub mod linalg;
pub mod paracomplex;
pub mod poisson;
pub mod statmanifold;
pub mod symplectic;

pub use error::{Error, Result};
