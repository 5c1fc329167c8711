//! Optimal dynamic on/off scheduling of heterogeneous server groups.
//!
//! A single FCFS queue with Poisson arrivals is served by `K` groups of
//! exponential servers; group `k` has `M_k` servers of rate `mu_k` costing
//! `c_k` per working server per unit time, and holding `n` customers costs
//! `h(n)` per unit time (increasing, convex). A scheduling policy chooses how
//! many servers of each group run at every queue length. This crate finds
//! policies minimizing the long-run average cost:
//!
//! * [`model`] — domain types and validation.
//! * [`ctmc`] — exact evaluation of a policy on an adaptively truncated
//!   birth-death chain: stationary distribution, average cost, potentials,
//!   and perturbation realization factors (PRF).
//! * [`optimize`] — index-policy iteration driven by `v c_k - mu_k G(n)`,
//!   c/mu-rule threshold iteration, a value-iteration cross-check, and a
//!   brute-force threshold oracle.
//! * [`simulate`] — discrete-event simulation for independent statistical
//!   validation of the analytic pipeline.
//!
//! All types are immutable after construction and evaluation functions are
//! pure, so independent solves can run concurrently without coordination.

pub mod ctmc;
pub mod error;
pub mod model;
pub mod optimize;
pub mod simulate;

pub use ctmc::{
    average_cost, balance_residual, build_chain, evaluate_at, evaluate_policy, poisson_residual,
    potentials, prf_forward, prf_tailsum, stationary_distribution, BirthDeathChain, SolveReport,
    TruncationOptions,
};
pub use error::{Error, Result};
pub use model::{
    Action, GroupSpec, HoldingCost, Policy, QueueModel, ThresholdPolicy, ValidationReport,
    Violation,
};
pub use optimize::{
    activation_index, brute_force_thresholds, check_scale_economies, effective_ratio, ilp_greedy,
    index_table, optimize_index_policy, optimize_thresholds, policy_cost_difference,
    threshold_to_policy, value_iteration, IndexRow, IndexSolution, IterationRecord,
    OptimizationTrace, Snapshot, SolveOptions, ThresholdSolution, ValueIterationOutcome,
};
pub use simulate::{simulate, SimConfig, SimEstimate, RNG_ALGORITHM};
