use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("state space of {states} states exceeds the budget of {budget}")]
    Capacity { states: usize, budget: usize },

    #[error("stationary solve did not converge: residual {residual:e} after {iterations} iterations")]
    Solver { residual: f64, iterations: usize },

    #[error("branch error: {0}")]
    Branch(String),

    #[error("precision error: {0}")]
    Precision(String),

    #[error("missing input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
