//! Finite-blocklength construction of the measurement-simulation protocol:
//! typical projectors, pruned codebooks, Alice's sub-POVMs, binning,
//! Bob's decoders and the exact faithful-simulation distance.

mod engine;
mod report;
mod typical;

pub use engine::{
    partial_trace_a_weighted, AliceSubPovm, Codebook, Protocol, SimOptions, MAX_PROTOCOL_DIM,
};
pub use report::{simulate, simulation_schemes, SeedReport, SimReport, SimulationScheme, Summary};
pub use typical::{
    conditional_typical_set, is_typical, jointly_typical, product_typical_projector, sequence,
    sequence_count, sequence_index, type_deviation, type_deviations, typical_set, LetterSpectrum,
    TYPICAL_SLACK,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::GraphError;
use crate::quantum::QuantumError;
use crate::rates::RateError;

/// Which construction to run: both parties on independent sets, or only Alice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Theorem {
    One,
    Two,
}

impl From<Theorem> for u8 {
    fn from(t: Theorem) -> u8 {
        match t {
            Theorem::One => 1,
            Theorem::Two => 2,
        }
    }
}

impl TryFrom<u8> for Theorem {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            1 => Ok(Theorem::One),
            2 => Ok(Theorem::Two),
            _ => Err(format!("theorem must be 1 or 2, got {v}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub n: usize,
    pub delta: f64,
    pub epsilon: f64,
    /// Codewords per common-randomness value.
    pub s: usize,
    /// Number of bins.
    pub t: usize,
    /// Number of common-randomness values.
    #[serde(rename = "M")]
    pub m: usize,
    pub seed: u64,
    pub theorem: Theorem,
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |m: String| Err(ProtocolError::InvalidConfig(m));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if !(self.delta > 0.0) || !(self.epsilon > 0.0) {
            return bad("delta and epsilon must be positive".into());
        }
        if self.s == 0 || self.t == 0 || self.m == 0 {
            return bad("s, t and M must be at least 1".into());
        }
        if self.t > self.s {
            return bad(format!("t = {} exceeds s = {}", self.t, self.s));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("invalid protocol configuration: {0}")]
    InvalidConfig(String),
    #[error("typical set is empty at delta = {delta}{}", min_delta.map(|d| format!("; smallest feasible delta is {d:.6}")).unwrap_or_default())]
    Infeasible { delta: f64, min_delta: Option<f64> },
    #[error("blocklength gives dimension {dim}, above the supported {limit}")]
    TooLarge { dim: usize, limit: usize },
    #[error("alternative measurement differs from the target by {residual:.3e}")]
    Equivalence { residual: f64 },
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}
