//! Policy optimization for the group-server queue.
//!
//! The driver quantity is the PRF `G(n)`: turning one more server of group
//! `k` on at state `n` changes the long-run average cost in proportion to
//! `v c_k - mu_k G(n)`. Groups with a negative index are worth running.
//! Both optimizers alternate exact policy evaluation with a greedy
//! improvement built from that index:
//!
//! * [`optimize_index_policy`] improves the action at every state through
//!   the per-state integer program (greedy fill in ascending index order),
//!   stopping each sweep at the first all-on state and extending all-on
//!   beyond it.
//! * [`optimize_thresholds`] searches multi-threshold policies in the
//!   ascending-c/mu group ordering: group `k` activates once `G(n)` crosses
//!   `v c_k / mu_k`. Under scale economies this family contains the optimum;
//!   without it the result is a useful heuristic and is flagged as such.
//!
//! [`value_iteration`] provides an independent uniformized dynamic-programming
//! estimate of the optimal cost, and [`brute_force_thresholds`] an exhaustive
//! oracle over the threshold family.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use serde::Serialize;

use crate::ctmc::{evaluate_at, evaluate_policy, SolveReport, TruncationOptions};
use crate::error::{Error, Result};
use crate::model::{Action, Policy, QueueModel, ThresholdPolicy};

/// States this close to the truncation boundary are not trusted when reading
/// PRF values: the reflecting boundary bends the tail of `G`.
const TRUST_MARGIN: usize = 10;

/// Options shared by both iterative optimizers.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub truncation: TruncationOptions,
    /// Cap on policy-improvement rounds.
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            truncation: TruncationOptions::default(),
            max_iterations: 100,
        }
    }
}

/// The activation index of group `k` at PRF value `g_diff`:
/// `v c_k - mu_k g_diff`. Negative means running the group reduces cost.
pub fn activation_index(model: &QueueModel, k: usize, g_diff: f64) -> f64 {
    model.operating_weight * model.groups[k].cost_rate - model.groups[k].service_rate * g_diff
}

/// Effective cost per unit of service rate, `v c_k / mu_k`; `G(n)` must
/// exceed it for group `k` to be economic at state `n`.
pub fn effective_ratio(model: &QueueModel, k: usize) -> f64 {
    model.operating_weight * model.groups[k].cost_rate / model.groups[k].service_rate
}

/// Solve the per-state integer program greedily: groups with nonnegative
/// index stay off (ties keep a group off); groups with negative index fill to
/// capacity in ascending index order, subject to `sum_k m_k <= n`. Index ties
/// break by original group position, so runs are deterministic.
pub fn ilp_greedy(model: &QueueModel, n: usize, g_diff: f64) -> Action {
    let k = model.group_count();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        activation_index(model, a, g_diff)
            .total_cmp(&activation_index(model, b, g_diff))
            .then(a.cmp(&b))
    });

    let mut counts = vec![0u32; k];
    let mut remaining = n as u64;
    for &j in &order {
        if activation_index(model, j, g_diff) >= 0.0 || remaining == 0 {
            continue;
        }
        let take = (model.groups[j].servers as u64).min(remaining) as u32;
        counts[j] = take;
        remaining -= take as u64;
    }
    Action::new(counts)
}

/// Per-state view of the activation indices.
#[derive(Debug, Clone, Serialize)]
pub struct IndexRow {
    pub state: usize,
    /// `v c_k - mu_k G(n)` for every group, in model order.
    pub indices: Vec<f64>,
    /// Groups whose index is negative (economic at this state).
    pub economic: Vec<usize>,
    /// Group positions in ascending index order (the greedy fill order).
    pub fill_order: Vec<usize>,
}

/// Activation indices for states `1..=limit` given a PRF vector.
pub fn index_table(model: &QueueModel, prf: &[f64], limit: usize) -> Vec<IndexRow> {
    (1..=limit.min(prf.len() - 1))
        .map(|n| {
            let indices: Vec<f64> = (0..model.group_count())
                .map(|k| activation_index(model, k, prf[n]))
                .collect();
            let economic = (0..model.group_count())
                .filter(|&k| indices[k] < 0.0)
                .collect();
            let mut fill_order: Vec<usize> = (0..model.group_count()).collect();
            fill_order.sort_by(|&a, &b| indices[a].total_cmp(&indices[b]).then(a.cmp(&b)));
            IndexRow {
                state: n,
                indices,
                economic,
                fill_order,
            }
        })
        .collect()
}

/// Sort groups by ascending c/mu (ties by original position) and check the
/// scale-economies condition: service rates nonincreasing along that order.
/// Returns the check outcome and the permutation (original indices).
pub fn check_scale_economies(model: &QueueModel) -> (bool, Vec<usize>) {
    let mut perm: Vec<usize> = (0..model.group_count()).collect();
    perm.sort_by(|&a, &b| {
        model.groups[a]
            .cost_per_rate()
            .total_cmp(&model.groups[b].cost_per_rate())
            .then(a.cmp(&b))
    });
    let ok = perm
        .windows(2)
        .all(|w| model.groups[w[0]].service_rate >= model.groups[w[1]].service_rate);
    (ok, perm)
}

/// Expand a threshold vector (ascending-c/mu space) into an explicit policy
/// in the model's group order: active groups fill to capacity in c/mu order,
/// subject to the efficiency constraint.
pub fn threshold_to_policy(model: &QueueModel, theta: &ThresholdPolicy) -> Result<Policy> {
    if theta.len() != model.group_count() {
        return Err(Error::Domain(format!(
            "threshold vector has {} entries, model has {} groups",
            theta.len(),
            model.group_count()
        )));
    }
    let (_, perm) = check_scale_economies(model);
    let total: u32 = model.total_servers();
    let frontier = (*theta.thresholds().last().unwrap()).max(total as usize);

    let mut actions = Vec::with_capacity(frontier + 1);
    for n in 0..=frontier {
        let mut counts = vec![0u32; model.group_count()];
        let mut remaining = n as u64;
        for (j, &k) in perm.iter().enumerate() {
            if n >= theta.thresholds()[j] && remaining > 0 {
                let take = (model.groups[k].servers as u64).min(remaining) as u32;
                counts[k] = take;
                remaining -= take as u64;
            }
        }
        actions.push(Action::new(counts));
    }
    Policy::new(model, actions)
}

/// One row of an optimization trace.
#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub eta: f64,
    pub frontier: usize,
    pub snapshot: Snapshot,
}

/// What the policy looked like at one iteration.
#[derive(Debug, Clone, Serialize)]
pub enum Snapshot {
    /// Explicit action table for states `0..=frontier`.
    Actions(Vec<Vec<u32>>),
    /// Threshold vector in the ascending-c/mu ordering.
    Thresholds(Vec<usize>),
}

/// Iteration history of an optimization run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct OptimizationTrace {
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
}

impl OptimizationTrace {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }
}

/// Result of the index-policy iteration.
#[derive(Debug, Clone)]
pub struct IndexSolution {
    pub policy: Policy,
    pub report: SolveReport,
    pub trace: OptimizationTrace,
}

/// Result of the c/mu threshold iteration.
#[derive(Debug, Clone)]
pub struct ThresholdSolution {
    /// Converged thresholds in the ascending-c/mu ordering.
    pub thresholds: ThresholdPolicy,
    /// The induced explicit policy (model group order).
    pub policy: Policy,
    pub report: SolveReport,
    pub trace: OptimizationTrace,
    /// Whether the scale-economies condition held; if not, the result is a
    /// heuristic rather than a proven optimum.
    pub scale_economies: bool,
    /// Original group indices in ascending c/mu order.
    pub group_order: Vec<usize>,
}

fn hash_of<T: Hash>(value: &T) -> u64 {
    let mut h = DefaultHasher::new();
    value.hash(&mut h);
    h.finish()
}

fn snapshot_actions(policy: &Policy) -> Snapshot {
    Snapshot::Actions(
        (0..=policy.frontier())
            .map(|n| policy.action(n).counts.clone())
            .collect(),
    )
}

/// All-ones threshold policy: every group on as far as the efficiency
/// constraint allows. The standard starting point for both optimizers.
fn all_on_policy(model: &QueueModel) -> Result<Policy> {
    let theta = ThresholdPolicy::new(vec![1; model.group_count()])?;
    threshold_to_policy(model, &theta)
}

fn ensure_valid(model: &QueueModel) -> Result<()> {
    let report = model.validate();
    if !report.passed() {
        return Err(Error::InvalidModel(
            report
                .violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; "),
        ));
    }
    Ok(())
}

/// Re-evaluate at a doubled truncation level when a sweep needs PRF values
/// past the trusted window.
fn grow_report(
    model: &QueueModel,
    policy: &Policy,
    report: SolveReport,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let bigger = report.truncation * 2;
    if bigger + 1 > opts.truncation.max_states {
        return Err(Error::Solver(format!(
            "policy sweep needed more than {} states",
            opts.truncation.max_states
        )));
    }
    evaluate_at(model, policy, bigger)
}

/// Iterative improvement of the full state-action table (index policy).
///
/// Starting from all-on, each round evaluates the current policy exactly,
/// rebuilds every action through [`ilp_greedy`] under the evaluated PRF until
/// the first all-on state, extends all-on beyond it, and repeats to a fixed
/// point. The returned report is the exact evaluation of the returned policy.
pub fn optimize_index_policy(model: &QueueModel, opts: &SolveOptions) -> Result<IndexSolution> {
    ensure_valid(model)?;

    let mut policy = all_on_policy(model)?;
    let mut trace = OptimizationTrace::default();
    let mut seen: HashMap<u64, f64> = HashMap::new();
    let mut best: Option<(f64, Policy, SolveReport)> = None;

    for iteration in 0..opts.max_iterations {
        let mut report = evaluate_policy(model, &policy, &opts.truncation)?;
        trace.iterations.push(IterationRecord {
            eta: report.eta,
            frontier: policy.frontier(),
            snapshot: snapshot_actions(&policy),
        });
        if best.as_ref().map(|(e, _, _)| report.eta < *e).unwrap_or(true) {
            best = Some((report.eta, policy.clone(), report.clone()));
        }

        let key = hash_of(&policy);
        if let Some(&earlier_eta) = seen.get(&key) {
            if (earlier_eta - report.eta).abs() <= 1e-12 {
                // Floating-point tie oscillation; settle on the best seen.
                trace.converged = true;
                let (_, policy, report) = best.unwrap();
                return Ok(IndexSolution {
                    policy,
                    report,
                    trace,
                });
            }
            return Err(Error::PolicyCycle {
                iteration,
                eta: report.eta,
                earlier_eta,
            });
        }
        seen.insert(key, report.eta);

        // Greedy improvement sweep, growing the evaluation if the all-on
        // state lies beyond the trusted PRF window.
        let actions = loop {
            let trusted = report.truncation.saturating_sub(TRUST_MARGIN);
            match greedy_sweep(model, &report, trusted) {
                Some(actions) => break actions,
                None => report = grow_report(model, &policy, report, opts)?,
            }
        };
        let improved = Policy::new(model, actions)?;

        if improved == policy {
            trace.converged = true;
            return Ok(IndexSolution {
                policy,
                report,
                trace,
            });
        }
        policy = improved;
    }

    let last_eta = trace.iterations.last().map(|r| r.eta).unwrap_or(f64::NAN);
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        last_eta,
        trace: Box::new(trace),
    })
}

/// One greedy rebuild of the action table; `None` if no all-on state was
/// reached inside the trusted window.
fn greedy_sweep(model: &QueueModel, report: &SolveReport, trusted: usize) -> Option<Vec<Action>> {
    let mut actions = vec![Action::zeros(model.group_count())];
    for n in 1..=trusted {
        let action = ilp_greedy(model, n, report.prf[n]);
        let done = action.is_all_on(model);
        actions.push(action);
        if done {
            return Some(actions);
        }
    }
    None
}

/// Iterative improvement over multi-threshold policies (the c/mu rule).
///
/// Groups are sorted by ascending c/mu; each round evaluates the current
/// threshold policy and re-derives every threshold as the first state where
/// `G` crosses the group's effective ratio. Thresholds are reported in
/// canonical form (raised to the first state where the group can actually
/// receive a server, which leaves the induced policy unchanged), and a fixed
/// point with `theta_1 > 1` is shifted down, which can only improve the cost.
pub fn optimize_thresholds(model: &QueueModel, opts: &SolveOptions) -> Result<ThresholdSolution> {
    ensure_valid(model)?;

    let (scale_economies, perm) = check_scale_economies(model);
    let ratios: Vec<f64> = perm.iter().map(|&k| effective_ratio(model, k)).collect();
    let servers_sorted: Vec<u32> = perm.iter().map(|&k| model.groups[k].servers).collect();

    let mut theta = canonicalize(vec![1; model.group_count()], &servers_sorted);
    let mut trace = OptimizationTrace::default();
    let mut seen: HashMap<u64, f64> = HashMap::new();
    let mut best: Option<(f64, Vec<usize>, Policy, SolveReport)> = None;

    for iteration in 0..opts.max_iterations {
        let thresholds = ThresholdPolicy::new(theta.clone())?;
        let policy = threshold_to_policy(model, &thresholds)?;
        let mut report = evaluate_policy(model, &policy, &opts.truncation)?;
        trace.iterations.push(IterationRecord {
            eta: report.eta,
            frontier: policy.frontier(),
            snapshot: Snapshot::Thresholds(theta.clone()),
        });
        if best.as_ref().map(|(e, ..)| report.eta < *e).unwrap_or(true) {
            best = Some((report.eta, theta.clone(), policy.clone(), report.clone()));
        }

        let key = hash_of(&theta);
        if let Some(&earlier_eta) = seen.get(&key) {
            if (earlier_eta - report.eta).abs() <= 1e-12 {
                trace.converged = true;
                let (_, theta, policy, report) = best.unwrap();
                return Ok(ThresholdSolution {
                    thresholds: ThresholdPolicy::new(theta)?,
                    policy,
                    report,
                    trace,
                    scale_economies,
                    group_order: perm,
                });
            }
            return Err(Error::PolicyCycle {
                iteration,
                eta: report.eta,
                earlier_eta,
            });
        }
        seen.insert(key, report.eta);

        // Re-derive thresholds from the G crossings, growing the evaluation
        // if a crossing lies beyond the trusted window.
        let raw = loop {
            let trusted = report.truncation.saturating_sub(TRUST_MARGIN);
            match threshold_sweep(&report, &ratios, trusted) {
                Some(raw) => break raw,
                None => report = grow_report(model, &policy, report, opts)?,
            }
        };
        let mut improved = canonicalize(raw, &servers_sorted);
        if improved[0] > 1 {
            // Shifting every threshold down by the same amount keeps the
            // activation pattern but trims transient low states.
            let shift = improved[0] - 1;
            improved = canonicalize(
                improved.into_iter().map(|t| t - shift).collect(),
                &servers_sorted,
            );
        }

        if improved == theta {
            trace.converged = true;
            return Ok(ThresholdSolution {
                thresholds,
                policy,
                report,
                trace,
                scale_economies,
                group_order: perm,
            });
        }
        theta = improved;
    }

    let last_eta = trace.iterations.last().map(|r| r.eta).unwrap_or(f64::NAN);
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        last_eta,
        trace: Box::new(trace),
    })
}

/// First states where `G` strictly exceeds each sorted ratio; `None` if some
/// crossing lies past the trusted window.
fn threshold_sweep(report: &SolveReport, ratios: &[f64], trusted: usize) -> Option<Vec<usize>> {
    let mut theta = Vec::with_capacity(ratios.len());
    let mut n = 1usize;
    for &ratio in ratios {
        loop {
            if n > trusted {
                return None;
            }
            if report.prf[n] > ratio {
                theta.push(n);
                break;
            }
            n += 1;
        }
    }
    Some(theta)
}

/// Raise each threshold to the first state where its group can actually be
/// assigned a server (`1 +` capacity of the higher-priority groups). The
/// induced policy is unchanged; the representative becomes unique.
fn canonicalize(mut theta: Vec<usize>, servers_sorted: &[u32]) -> Vec<usize> {
    let mut ahead: u64 = 0;
    for (j, t) in theta.iter_mut().enumerate() {
        *t = (*t).max(ahead as usize + 1);
        ahead += servers_sorted[j] as u64;
    }
    // The floor sequence is increasing, so this preserves monotonicity.
    for j in 1..theta.len() {
        theta[j] = theta[j].max(theta[j - 1]);
    }
    theta
}

/// Average-cost change predicted by the difference formula when switching
/// from `base` to `target`: `sum_n pi'(n) sum_k (d'(n,k) - d(n,k)) (v c_k -
/// mu_k G(n))`, with `G` evaluated under `base` and `pi'` under `target`.
/// Agrees with the directly evaluated `eta' - eta`.
pub fn policy_cost_difference(
    model: &QueueModel,
    base: &Policy,
    target: &Policy,
) -> Result<f64> {
    let opts = TruncationOptions::default();
    let base_report = evaluate_policy(model, base, &opts)?;
    let target_report = evaluate_policy(model, target, &opts)?;
    let common = base_report.truncation.max(target_report.truncation);
    let base_report = if base_report.truncation < common {
        evaluate_at(model, base, common)?
    } else {
        base_report
    };
    let target_report = if target_report.truncation < common {
        evaluate_at(model, target, common)?
    } else {
        target_report
    };

    let mut sum = 0.0;
    for n in 1..=common {
        let pi_new = target_report.pi[n];
        if pi_new == 0.0 {
            continue;
        }
        let d_old = base.action(n);
        let d_new = target.action(n);
        let mut inner = 0.0;
        for k in 0..model.group_count() {
            let delta = d_new.counts[k] as f64 - d_old.counts[k] as f64;
            if delta != 0.0 {
                inner += delta * activation_index(model, k, base_report.prf[n]);
            }
        }
        sum += pi_new * inner;
    }
    Ok(sum)
}

/// Outcome of the uniformized relative value iteration.
#[derive(Debug, Clone)]
pub struct ValueIterationOutcome {
    /// Converged relative values with `g[0] = 0`.
    pub g: Vec<f64>,
    /// Average-cost estimate (midpoint of the final span bounds).
    pub eta: f64,
    pub sweeps: usize,
    /// Smallest `g_l(n+1) - g_l(n)` seen over all sweeps, away from the
    /// truncation boundary.
    pub min_increment: f64,
    /// Smallest second difference seen over all sweeps, away from the
    /// truncation boundary.
    pub min_second_difference: f64,
}

const VALUE_ITERATION_SWEEP_CAP: usize = 200_000;

/// Uniformized relative value iteration on `[0, n_max]` with rate constant
/// `lambda + sum_k M_k mu_k`. The inner minimization over actions reuses the
/// greedy index fill. Stops when the span bounds on the average cost are
/// tighter than `epsilon`.
///
/// Serves as an independent check on the optimizers: it never evaluates a
/// stationary distribution.
pub fn value_iteration(
    model: &QueueModel,
    n_max: usize,
    epsilon: f64,
) -> Result<ValueIterationOutcome> {
    ensure_valid(model)?;
    let lambda = model.arrival_rate;
    let uniform_rate = lambda + model.capacity();

    // Structural statistics ignore states within reach of the reflecting
    // boundary's distortion.
    let guard_end = if n_max > 60 { n_max - 40 } else { (2 * n_max) / 3 };

    let mut w = vec![0.0; n_max + 1];
    let mut u = vec![0.0; n_max + 1];
    let mut min_increment = f64::INFINITY;
    let mut min_second = f64::INFINITY;

    for sweep in 1..=VALUE_ITERATION_SWEEP_CAP {
        for n in 0..=n_max {
            let g_diff = if n == 0 { 0.0 } else { w[n] - w[n - 1] };
            let action = ilp_greedy(model, n, g_diff);
            let served = model.service_rate(&action);
            let cost = model.holding_cost(n) + model.operating_cost(&action);
            let up = if n < n_max { w[n + 1] } else { w[n] };
            let down = if n > 0 { w[n - 1] } else { w[0] };
            u[n] = (cost + (uniform_rate - lambda - served) * w[n] + lambda * up + served * down)
                / uniform_rate;
        }

        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for n in 0..=n_max {
            let d = u[n] - w[n];
            lo = lo.min(d);
            hi = hi.max(d);
        }

        let offset = u[0];
        for x in u.iter_mut() {
            *x -= offset;
        }
        for n in 1..=guard_end {
            min_increment = min_increment.min(u[n] - u[n - 1]);
            if n < guard_end {
                min_second = min_second.min(u[n + 1] - 2.0 * u[n] + u[n - 1]);
            }
        }

        std::mem::swap(&mut w, &mut u);

        if uniform_rate * (hi - lo) < epsilon {
            return Ok(ValueIterationOutcome {
                g: w,
                eta: uniform_rate * (hi + lo) / 2.0,
                sweeps: sweep,
                min_increment,
                min_second_difference: min_second,
            });
        }
    }

    Err(Error::NonConvergence {
        iterations: VALUE_ITERATION_SWEEP_CAP,
        last_eta: f64::NAN,
        trace: Box::new(OptimizationTrace::default()),
    })
}

/// Exhaustively evaluate every canonical nondecreasing threshold vector with
/// `theta_K <= bound` and return the cheapest. Guarded against enumerations
/// past a million candidates. Ties keep the lexicographically first vector.
pub fn brute_force_thresholds(
    model: &QueueModel,
    bound: usize,
) -> Result<(ThresholdPolicy, f64)> {
    ensure_valid(model)?;
    const GUARD: u64 = 1_000_000;

    let (_, perm) = check_scale_economies(model);
    let servers_sorted: Vec<u32> = perm.iter().map(|&k| model.groups[k].servers).collect();
    let k = servers_sorted.len();
    let mut floors = vec![1usize; k];
    let mut ahead = 0u64;
    for j in 0..k {
        floors[j] = ahead as usize + 1;
        ahead += servers_sorted[j] as u64;
    }
    if floors[k - 1] > bound {
        return Err(Error::Domain(format!(
            "bound {bound} is below the smallest canonical threshold {} for the last group",
            floors[k - 1]
        )));
    }

    let count = count_candidates(&floors, bound, GUARD);
    if count > GUARD {
        return Err(Error::Enumeration {
            count,
            guard: GUARD,
        });
    }

    let opts = TruncationOptions::default();
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut stack = vec![0usize; k];
    enumerate(&floors, bound, 0, &mut stack, &mut |theta| {
        let policy = threshold_to_policy(model, &ThresholdPolicy::new(theta.to_vec())?)?;
        let report = evaluate_policy(model, &policy, &opts)?;
        if best.as_ref().map(|(_, e)| report.eta < *e).unwrap_or(true) {
            best = Some((theta.to_vec(), report.eta));
        }
        Ok(())
    })?;

    let (theta, eta) = best.expect("at least one candidate was enumerated");
    Ok((ThresholdPolicy::new(theta)?, eta))
}

fn count_candidates(floors: &[usize], bound: usize, guard: u64) -> u64 {
    // counts[t] = number of valid suffixes given the previous threshold t
    let mut counts = vec![1u64; bound + 1];
    for j in (0..floors.len()).rev() {
        let mut next = vec![0u64; bound + 1];
        for prev in 0..=bound {
            let lo = floors[j].max(prev);
            let mut total = 0u64;
            for t in lo..=bound {
                total = total.saturating_add(counts[t]);
                if total > guard {
                    return total;
                }
            }
            next[prev] = total;
        }
        counts = next;
    }
    counts[0]
}

fn enumerate<F>(
    floors: &[usize],
    bound: usize,
    depth: usize,
    stack: &mut Vec<usize>,
    visit: &mut F,
) -> Result<()>
where
    F: FnMut(&[usize]) -> Result<()>,
{
    if depth == floors.len() {
        return visit(stack);
    }
    let lo = floors[depth].max(if depth == 0 { 1 } else { stack[depth - 1] });
    for t in lo..=bound {
        stack[depth] = t;
        enumerate(floors, bound, depth + 1, stack, visit)?;
    }
    Ok(())
}
