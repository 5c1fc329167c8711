//! Birth-death chain evaluation for a (model, policy) pair on a truncated
//! state space: stationary distribution, average cost, performance
//! potentials, and perturbation realization factors (PRF).
//!
//! The chain under an efficient policy is a birth-death process with constant
//! birth rate `lambda` and state-dependent death rate `d(n) mu`. Truncation
//! reflects at the top state (its up-rate is dropped) so the generator stays
//! proper; the truncation level is grown adaptively until the estimated tail
//! mass and the average-cost increment both fall below tolerance.
//!
//! Two PRF routes are implemented. The forward recursion
//! `G(n+1) = (d(n)mu / lambda) G(n) + (eta - f(n)) / lambda` follows the
//! defining recursion directly but multiplies by `d(n)mu / lambda > 1` in the
//! stable tail, so it amplifies rounding error in `eta` geometrically. The
//! stationary-weighted tail sum `G(n+1) = sum_{j>n} pi(j)(f(j) - eta) /
//! (lambda pi(n))` is algebraically identical (partial summation of the
//! Poisson equation using detailed balance) and numerically stable; it is the
//! primary route, and the forward recursion is kept as a consistency check.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Policy, QueueModel};

/// Tolerances and limits for the adaptive truncation driver.
#[derive(Debug, Clone)]
pub struct TruncationOptions {
    /// Initial margin above the policy frontier.
    pub initial_margin: usize,
    /// Stop growing once the estimated tail mass is below this.
    pub tail_mass_tol: f64,
    /// ... and the average cost moved less than this between levels.
    pub eta_tol: f64,
    /// Hard cap on the number of retained states.
    pub max_states: usize,
    /// Evaluate at exactly this level instead of adapting.
    pub n_max_override: Option<usize>,
}

impl Default for TruncationOptions {
    fn default() -> Self {
        Self {
            initial_margin: 50,
            tail_mass_tol: 1e-12,
            eta_tol: 1e-9,
            max_states: 1_000_000,
            n_max_override: None,
        }
    }
}

/// Truncated birth-death generator for a (model, policy) pair.
///
/// `death_rates[n]` is the total service rate `d(n) mu` at state `n`;
/// `death_rates[0]` is always 0 because no efficient action serves an empty
/// system. The top state has no up-rate (reflecting truncation).
#[derive(Debug, Clone)]
pub struct BirthDeathChain {
    birth_rate: f64,
    death_rates: Vec<f64>,
}

impl BirthDeathChain {
    pub fn new(birth_rate: f64, death_rates: Vec<f64>) -> Self {
        Self {
            birth_rate,
            death_rates,
        }
    }

    pub fn birth_rate(&self) -> f64 {
        self.birth_rate
    }

    pub fn death_rate(&self, n: usize) -> f64 {
        self.death_rates[n]
    }

    pub fn death_rates(&self) -> &[f64] {
        &self.death_rates
    }

    /// Highest retained state.
    pub fn n_max(&self) -> usize {
        self.death_rates.len() - 1
    }

    /// Number of retained states (`n_max + 1`).
    pub fn size(&self) -> usize {
        self.death_rates.len()
    }

    /// Nonzero generator entries of row `n`: (down, diagonal, up).
    pub fn generator_row(&self, n: usize) -> (f64, f64, f64) {
        let down = self.death_rates[n];
        let up = if n < self.n_max() { self.birth_rate } else { 0.0 };
        (down, -(down + up), up)
    }
}

/// Build the truncated generator for `policy` on `[0, n_max]`.
///
/// Fails if `n_max` does not reach the policy frontier or if the all-on tail
/// cannot outrun arrivals.
pub fn build_chain(model: &QueueModel, policy: &Policy, n_max: usize) -> Result<BirthDeathChain> {
    if n_max < policy.frontier() {
        return Err(Error::Truncation {
            n_max,
            frontier: policy.frontier(),
        });
    }
    let death_rates: Vec<f64> = (0..=n_max).map(|n| policy.service_rate(model, n)).collect();
    // Past the frontier the policy is all-on; stability there is what makes
    // the truncation meaningful.
    let tail_rate = death_rates[n_max];
    if tail_rate <= model.arrival_rate {
        return Err(Error::Instability(format!(
            "all-on service rate {tail_rate} does not exceed arrival rate {}",
            model.arrival_rate
        )));
    }
    Ok(BirthDeathChain::new(model.arrival_rate, death_rates))
}

/// Stationary distribution of the truncated chain via the birth-death product
/// form, accumulated in the log domain to avoid underflow.
///
/// States below the last zero-death state are transient and get exactly zero
/// mass.
pub fn stationary_distribution(chain: &BirthDeathChain) -> Result<Vec<f64>> {
    let n_max = chain.n_max();
    if n_max >= 1 && (1..=n_max).all(|n| chain.death_rate(n) == 0.0) {
        return Err(Error::Instability(
            "every death rate beyond state 0 is zero; no stationary distribution".into(),
        ));
    }

    // First recurrent state: just past the last zero death rate.
    let base = (1..=n_max)
        .rev()
        .find(|&n| chain.death_rate(n) == 0.0)
        .unwrap_or(0);

    let lambda = chain.birth_rate();
    let mut log_w = vec![f64::NEG_INFINITY; n_max + 1];
    log_w[base] = 0.0;
    for n in (base + 1)..=n_max {
        log_w[n] = log_w[n - 1] + lambda.ln() - chain.death_rate(n).ln();
    }

    let max_log = log_w[base..]
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = log_w[base..].iter().map(|&lw| (lw - max_log).exp()).sum();
    let log_z = max_log + z.ln();

    let pi: Vec<f64> = log_w
        .iter()
        .map(|&lw| {
            if lw == f64::NEG_INFINITY {
                0.0
            } else {
                (lw - log_z).exp()
            }
        })
        .collect();
    Ok(pi)
}

/// Geometric estimate of the probability mass lost to truncation, using the
/// decay ratio at the boundary.
pub fn tail_mass_estimate(chain: &BirthDeathChain, pi: &[f64]) -> f64 {
    let n_max = chain.n_max();
    let d = chain.death_rate(n_max);
    if d <= chain.birth_rate() {
        return f64::INFINITY;
    }
    let r = chain.birth_rate() / d;
    pi[n_max] * r / (1.0 - r)
}

/// Long-run average cost `eta = pi f` under the policy.
pub fn average_cost(model: &QueueModel, policy: &Policy, pi: &[f64]) -> f64 {
    pi.iter()
        .enumerate()
        .map(|(n, &p)| p * policy.cost_rate(model, n))
        .sum()
}

/// PRF by the textbook forward recursion. Entry `n` holds `G(n)`;
/// entry 0 is an unused sentinel.
///
/// Exact in exact arithmetic, but amplifies rounding in `eta` by the running
/// product of `d(n)mu / lambda`; trust it only while that product is small.
pub fn prf_forward(model: &QueueModel, policy: &Policy, eta: f64, n_max: usize) -> Vec<f64> {
    let lambda = model.arrival_rate;
    let mut g = vec![0.0; n_max + 1];
    if n_max == 0 {
        return g;
    }
    g[1] = (eta - policy.cost_rate(model, 0)) / lambda;
    for n in 1..n_max {
        let d = policy.service_rate(model, n);
        g[n + 1] = (d / lambda) * g[n] + (eta - policy.cost_rate(model, n)) / lambda;
    }
    g
}

/// PRF by stationary-weighted tail summation: the stable route.
///
/// `G(n+1) = sum_{j>n} pi(j)(f(j) - eta) / (lambda pi(n))`.
///
/// Below the mode of `pi` this divides by a possibly tiny probability while
/// the summation noise is set by the bulk of the distribution, so there the
/// forward recursion is used instead: up to the mode its error amplification
/// is bounded by `pi(j)/pi(mode) <= 1` (the recursion contracts exactly
/// where the mass still rises), which also covers transient states with
/// `pi = 0`. Past the mode the tail sum is the stable side.
pub fn prf_tailsum(
    model: &QueueModel,
    policy: &Policy,
    pi: &[f64],
    eta: f64,
) -> Result<Vec<f64>> {
    let n_max = pi.len() - 1;
    let lambda = model.arrival_rate;

    // suffix[n] = sum_{j >= n} pi(j) (f(j) - eta)
    let mut suffix = vec![0.0; n_max + 2];
    for n in (0..=n_max).rev() {
        suffix[n] = suffix[n + 1] + pi[n] * (policy.cost_rate(model, n) - eta);
    }

    let mut mode = 0;
    for (n, &p) in pi.iter().enumerate() {
        if p > pi[mode] {
            mode = n;
        }
    }

    let mut g = vec![0.0; n_max + 1];
    for n in 1..=n_max {
        if n == 1 {
            g[1] = (eta - policy.cost_rate(model, 0)) / lambda;
        } else if n <= mode {
            let d = policy.service_rate(model, n - 1);
            g[n] = (d / lambda) * g[n - 1] + (eta - policy.cost_rate(model, n - 1)) / lambda;
        } else {
            g[n] = suffix[n] / (lambda * pi[n - 1]);
        }
        if !g[n].is_finite() {
            return Err(Error::Solver(format!(
                "PRF tail sum produced a non-finite value at state {n}"
            )));
        }
    }
    Ok(g)
}

/// Performance potentials `g` with the normalization `g(0) = 0`, built by
/// accumulating the stable PRF so that `G(n) = g(n) - g(n-1)` by construction.
pub fn potentials(model: &QueueModel, policy: &Policy, pi: &[f64], eta: f64) -> Result<Vec<f64>> {
    let prf = prf_tailsum(model, policy, pi, eta)?;
    let mut g = vec![0.0; prf.len()];
    for n in 1..prf.len() {
        g[n] = g[n - 1] + prf[n];
    }
    Ok(g)
}

/// Everything the optimizers need from one exact evaluation of a policy.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    /// Stationary distribution over `[0, truncation]`.
    pub pi: Vec<f64>,
    /// Long-run average cost.
    pub eta: f64,
    /// Potentials with `g[0] = 0`.
    pub g: Vec<f64>,
    /// PRF; `prf[n] = g[n] - g[n-1]` for `n >= 1`, `prf[0]` unused (0).
    pub prf: Vec<f64>,
    /// Estimated stationary mass beyond the truncation.
    pub tail_mass: f64,
    /// Truncation level actually used.
    pub truncation: usize,
}

impl SolveReport {
    /// Mean number of customers in the system.
    pub fn mean_queue_length(&self) -> f64 {
        self.pi.iter().enumerate().map(|(n, &p)| p * n as f64).sum()
    }
}

/// Evaluate a policy exactly, growing the truncation level until the tail
/// mass and the average-cost increment both drop below tolerance.
pub fn evaluate_policy(
    model: &QueueModel,
    policy: &Policy,
    opts: &TruncationOptions,
) -> Result<SolveReport> {
    if let Some(n_max) = opts.n_max_override {
        return evaluate_at(model, policy, n_max);
    }

    let mut n_max = policy.frontier() + opts.initial_margin;
    let mut previous_eta: Option<f64> = None;
    loop {
        let report = evaluate_at(model, policy, n_max)?;
        let eta_settled = previous_eta
            .map(|prev| (prev - report.eta).abs() < opts.eta_tol)
            .unwrap_or(false);
        if report.tail_mass < opts.tail_mass_tol && eta_settled {
            return Ok(report);
        }
        previous_eta = Some(report.eta);
        n_max *= 2;
        if n_max + 1 > opts.max_states {
            return Err(Error::Solver(format!(
                "truncation exceeded {} states without meeting tolerances",
                opts.max_states
            )));
        }
    }
}

/// One exact evaluation at a fixed truncation level.
pub fn evaluate_at(model: &QueueModel, policy: &Policy, n_max: usize) -> Result<SolveReport> {
    let chain = build_chain(model, policy, n_max)?;
    let pi = stationary_distribution(&chain)?;
    let eta = average_cost(model, policy, &pi);
    let tail = prf_tailsum(model, policy, &pi, eta)?;
    let mut g = vec![0.0; tail.len()];
    for n in 1..tail.len() {
        g[n] = g[n - 1] + tail[n];
    }
    // Store the PRF as the exact f64 differences of the accumulated g, so
    // the report satisfies G(n) = g(n) - g(n-1) identically. Where the
    // potentials grow large this absorbs the accumulation rounding (below
    // one ulp of g) instead of leaving it in the identity.
    let mut prf = vec![0.0; tail.len()];
    for n in 1..tail.len() {
        prf[n] = g[n] - g[n - 1];
    }
    let tail_mass = tail_mass_estimate(&chain, &pi);
    Ok(SolveReport {
        pi,
        eta,
        g,
        prf,
        tail_mass,
        truncation: n_max,
    })
}

/// Largest scaled residual of the Poisson equation over the rows `[0, n_max-1]`
/// (the top row is the linearly dependent one under reflecting truncation).
pub fn poisson_residual(model: &QueueModel, policy: &Policy, report: &SolveReport) -> f64 {
    let lambda = model.arrival_rate;
    let scale = report.eta.abs().max(1.0);
    let g = &report.g;
    let mut worst = 0.0f64;
    for n in 0..report.truncation {
        let f_n = policy.cost_rate(model, n);
        let residual = if n == 0 {
            f_n - report.eta + lambda * (g[1] - g[0])
        } else {
            let d = policy.service_rate(model, n);
            f_n - report.eta + lambda * g[n + 1] + d * g[n - 1] - (lambda + d) * g[n]
        };
        worst = worst.max(residual.abs() / scale);
    }
    worst
}

/// Largest entry of `pi B` relative to the arrival rate: the global balance
/// residual of the computed stationary vector.
pub fn balance_residual(chain: &BirthDeathChain, pi: &[f64]) -> f64 {
    let n_max = chain.n_max();
    let mut worst = 0.0f64;
    for n in 0..=n_max {
        // column n of B: inflow from n-1 (birth) and n+1 (death), outflow at n
        let mut v = pi[n] * chain.generator_row(n).1;
        if n > 0 {
            v += pi[n - 1] * chain.birth_rate();
        }
        if n < n_max {
            v += pi[n + 1] * chain.death_rate(n + 1);
        }
        worst = worst.max(v.abs());
    }
    worst / chain.birth_rate().max(1.0)
}
