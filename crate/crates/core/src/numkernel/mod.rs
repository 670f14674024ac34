//! Dense complex linear algebra: Hermitian eigendecomposition, singular
//! values, nullspaces, polar factors and the exponential/logarithm pair for
//! skew-Hermitian and unitary matrices.

mod eig;
mod functions;
mod matrix;
pub mod random;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use eig::{herm_eig, jacobi_svd, nullity, nullspace, nullspace_scaled, op_norm, singular_values, HermEig, JacobiSvd, MAX_SWEEPS};
pub use functions::{expm_skew, inverse, logm_unitary_principal, polar_unitary, PrincipalLog, SkewExp};
pub use matrix::CMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch { expected: (usize, usize), found: (usize, usize) },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is not Hermitian (‖A − A*‖ = {residual:e})")]
    NotHermitian { residual: f64 },
    #[error("matrix is not skew-Hermitian (‖Z + Z*‖ = {residual:e})")]
    NotSkew { residual: f64 },
    #[error("matrix is not unitary (‖W*W − I‖ = {residual:e})")]
    NotUnitary { residual: f64 },
    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("matrix is singular (nullity {nullity})")]
    SingularInput { nullity: usize },
    #[error("eigenvalue {re:+e}{im:+e}i lies on the branch cut at −1")]
    LogAtMinusOne { re: f64, im: f64 },
    #[error("invalid tolerance: {0}")]
    BadTolerance(String),
}

/// Relative thresholds for rank decisions and reconstruction checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub rank_rtol: f64,
    pub recon_rtol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rank_rtol: 1e-10, recon_rtol: 1e-12 }
    }
}

impl Tolerance {
    pub fn new(rank_rtol: f64, recon_rtol: f64) -> Result<Self, NumError> {
        for (name, v) in [("rank_rtol", rank_rtol), ("recon_rtol", recon_rtol)] {
            if !(v > 0.0 && v < 1e-2) {
                return Err(NumError::BadTolerance(format!("{name} = {v} outside (0, 1e-2)")));
            }
        }
        Ok(Self { rank_rtol, recon_rtol })
    }

    pub fn with_rank_rtol(self, rank_rtol: f64) -> Result<Self, NumError> {
        Self::new(rank_rtol, self.recon_rtol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_bounds() {
        assert!(Tolerance::new(1e-10, 1e-12).is_ok());
        assert!(Tolerance::new(0.0, 1e-12).is_err());
        assert!(Tolerance::new(1e-10, 0.5).is_err());
        assert!(Tolerance::default().with_rank_rtol(-1.0).is_err());
    }
}
