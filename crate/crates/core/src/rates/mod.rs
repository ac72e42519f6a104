//! Achievable (R, R+S) bounds for a problem instance and their
//! time-sharing combination.

mod bounds;
mod channel;
mod classical;
mod region;

pub use bounds::{
    baseline_rates, holevo_with_reference, one_sided_rates, rate_bounds, two_sided_rates,
    two_sided_terms, ChannelChoice, ChannelSource, RateBound, RatePoint, TwoSidedTerms,
};
pub use channel::{lift_povm, ConditionalChannel};
pub use classical::{classical_rate, conditional_entropy, joint_uw, joint_wv, mutual_information};
pub use region::{combined_region, point_corners, RateRegion};

use thiserror::Error;

use crate::graph::GraphError;
use crate::quantum::QuantumError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("channel puts mass on set {set:?} which does not contain symbol {}", .symbol + 1)]
    SupportViolation { symbol: usize, set: Vec<usize> },
    #[error("no rate points to combine")]
    EmptyRegion,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

/// Formats with 9 significant digits, dropping trailing zeros.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{}", if x == 0.0 { 0.0 } else { x });
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("float round-trip");
    format!("{rounded}")
}
