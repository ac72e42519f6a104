//! Minimization of I(W;U|V) over channels supported on independent sets.

mod objective;
mod pgd;

pub use objective::{gradient, objective, support_mask};
pub use pgd::{
    channel_optimizers, conditional_graph_entropy, grid_oracle, project_simplex, ChannelOptimizer,
    GridSearch, OptimizedChannel, OptimizerConfig, ProjectedGradient,
};

use thiserror::Error;

use crate::graph::GraphError;
use crate::rates::RateError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),
    #[error("grid search supports at most {max} free parameters, family has {count}")]
    TooManyParameters { count: usize, max: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Rate(#[from] RateError),
}
