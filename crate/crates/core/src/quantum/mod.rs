//! Dense operator algebra for desk-scale quantum information quantities.
//!
//! Everything here works on explicit complex matrices with a declared
//! subsystem structure. Entropies are in bits.

mod cq;
mod entropy;
mod operator;
mod state;

pub use cq::{cq_conditional_mutual_information, cq_mutual_information, CqEnsemble, CqTerm};
pub use entropy::{entropy_of_spectrum, shannon_entropy, von_neumann_entropy};
pub use operator::{flatten, strides, unflatten, Eigh, Matrix, Operator, C64, HERMITIZE_TOL};
pub use state::{purify, DensityOperator, Povm};

use thiserror::Error;

/// Eigenvalues in `[-EIGEN_CLIP, 0)` are treated as zero; anything more
/// negative is reported as an error.
pub const EIGEN_CLIP: f64 = 1e-10;

/// Numerical rank threshold used by purification and pseudo-inverses.
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("invalid subsystem dimensions {0:?}")]
    BadDims(Vec<usize>),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("subsystem structures differ: {left:?} vs {right:?}")]
    SubsystemMismatch { left: Vec<usize>, right: Vec<usize> },
    #[error("invalid subsystem selection {keep:?} for {count} subsystems")]
    BadSubsystemSelection { keep: Vec<usize>, count: usize },
    #[error("operator is not Hermitian (residue {residue:.3e})")]
    NotHermitian { residue: f64 },
    #[error("eigenvalue {value:.3e} is below the clipping tolerance")]
    NegativeEigenvalue { value: f64 },
    #[error("trace {trace} differs from 1")]
    BadTrace { trace: f64 },
    #[error("POVM element {index} is not positive semidefinite (min eigenvalue {min:.3e})")]
    PovmElementNotPsd { index: usize, min: f64 },
    #[error("POVM elements do not sum to the identity (max deviation {deviation:.3e})")]
    PovmIncomplete { deviation: f64 },
    #[error("sub-POVM elements sum above the identity (max eigenvalue {max:.6})")]
    PovmOverfull { max: f64 },
    #[error("POVM is empty")]
    EmptyPovm,
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),
}
