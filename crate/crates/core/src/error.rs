use thiserror::Error;

use crate::optimize::OptimizationTrace;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// The model failed validation (capacity, rates, holding-cost shape).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// An argument violated an operation's domain contract.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested truncation level cannot represent the policy.
    #[error("truncation level {n_max} is below the policy frontier {frontier}")]
    Truncation { n_max: usize, frontier: usize },

    /// The chain (or a simulated path) is not stable.
    #[error("instability: {0}")]
    Instability(String),

    /// An iterative procedure hit its iteration cap without reaching a fixed point.
    #[error("no convergence after {iterations} iterations (last eta {last_eta})")]
    NonConvergence {
        iterations: usize,
        last_eta: f64,
        trace: Box<OptimizationTrace>,
    },

    /// A previously visited policy recurred with a materially different cost.
    #[error("policy cycle detected at iteration {iteration}: eta {eta} vs earlier {earlier_eta}")]
    PolicyCycle {
        iteration: usize,
        eta: f64,
        earlier_eta: f64,
    },

    /// A brute-force enumeration would exceed its guard bound.
    #[error("enumeration too large: {count} candidates exceed the guard of {guard}")]
    Enumeration { count: u64, guard: u64 },

    /// A linear solve or recursion produced a non-finite value.
    #[error("solver error: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
