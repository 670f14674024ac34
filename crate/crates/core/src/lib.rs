//! Geodesics between orthogonal projections.
//!
//! * [`numkernel`]: dense complex kernels (Jacobi eigensolver, SVD, polar
//!   factor, exponential and principal logarithm).
//! * [`projection`]: projections, the five-subspace decomposition of a pair
//!   and its index.
//! * [`geodesic`]: minimal geodesics `t ↦ e^{tZ}Pe^{−tZ}`, lengths,
//!   competitors and uniqueness checks.
//! * [`calkin`]: block-periodic operators modulo finitely supported ones, an
//!   exactly computable stand-in for the Calkin algebra.
//! * [`verify`]: seeded verification suites and their JSON reports.

pub mod numkernel;

pub use numkernel::{CMatrix, NumError, Tolerance};
pub mod projection;
pub mod geodesic;
pub mod calkin;
pub mod report;
pub mod verify;
