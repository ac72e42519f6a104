//! Classical reduction of the distributed measurement problem: the induced
//! joint distribution, the independence relations on each side, and the
//! function lifted onto independent-set labels.

mod cliques;
mod family;
mod independence;
mod pmf;
mod tilde;

pub use cliques::{maximal_cliques, Bitset};
pub use family::IndependentSetFamily;
pub use independence::{
    alice_independence, bob_independence, bob_set_is_independent, maximal_independent_sets, Side,
};
pub use pmf::{induce_joint_pmf, FunctionTable, JointPmf, POSITIVE_TOL};
pub use tilde::{build_tilde_g, LiftedFunction};

use thiserror::Error;

use crate::quantum::QuantumError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("invalid joint distribution: {0}")]
    InvalidPmf(String),
    #[error("invalid function table: {0}")]
    InvalidTable(String),
    #[error("invalid independent-set family: {0}")]
    InvalidFamily(String),
    #[error("family does not span the alphabet; uncovered symbols {missing:?}")]
    NotSpanning { missing: Vec<usize> },
    #[error("set {set:?} violates the independence predicate")]
    NotIndependent { set: Vec<usize> },
    #[error("lifted function is inconsistent in cell ({wa}, {wb}): labels {first} and {second}")]
    Inconsistent {
        wa: usize,
        wb: usize,
        first: usize,
        second: usize,
    },
    #[error("alphabet of size {0} exceeds the supported 128 symbols")]
    AlphabetTooLarge(usize),
    #[error("{0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}
