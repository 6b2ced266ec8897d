//! Dense and tridiagonal-band linear algebra.
//!
//! The dense kernel is the reference path: Cholesky and LU solves and the
//! symmetric generalized eigenproblem (Cholesky reduction followed by cyclic
//! Jacobi). Every operator assembled on a 1D P1/P0 pair has at most one
//! off-diagonal on each side, so [`TriBand`] carries the large levels with
//! linear-time solves and Sturm-sequence bisection for extremal pencil
//! eigenvalues.

mod band;
mod dense;

pub use band::{pencil_eigenvalue, pencil_extremes, TriBand};
pub use dense::{cholesky_solve, eig_sym_generalized, lu_solve, DenseMatrix, GeneralizedEigen};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("matrix is numerically singular (pivot {pivot} at column {col})")]
    Singular { col: usize, pivot: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("eigensolver did not converge in {0} sweeps")]
    NoConvergence(usize),
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}
