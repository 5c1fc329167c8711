//! Shared fixtures and independent oracles for the integration suites.
//!
//! Everything here is deliberately independent of the library's production
//! numerics: the Poisson oracle is a dense Gaussian-elimination solve, the
//! ILP oracle an exhaustive enumeration.

#![allow(dead_code)]

use gsq_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

// ---------------------------------------------------------------------------
// Reference instances
// ---------------------------------------------------------------------------

/// Three-group reference system: lambda 10, M = (3,4,3), mu = (6,4,2),
/// linear holding cost, configurable operating costs.
pub fn three_group_model(costs: [f64; 3]) -> QueueModel {
    QueueModel::new(
        10.0,
        vec![
            GroupSpec::new(3, 6.0, costs[0]),
            GroupSpec::new(4, 4.0, costs[1]),
            GroupSpec::new(3, 2.0, costs[2]),
        ],
        HoldingCost::linear(1.0),
    )
}

/// Same groups with the economies-of-scale cost vector and a variable
/// arrival rate.
pub fn cmu_model(lambda: f64) -> QueueModel {
    let mut m = three_group_model([7.0, 8.0, 5.0]);
    m.arrival_rate = lambda;
    m
}

/// Scalability family: K groups of 3 servers, mu = (2, ..., K+1),
/// c = mu^0.9, lambda at half the total capacity.
pub fn scalability_model(k: usize) -> QueueModel {
    let groups: Vec<GroupSpec> = (0..k)
        .map(|j| {
            let mu = (j + 2) as f64;
            GroupSpec::new(3, mu, mu.powf(0.9))
        })
        .collect();
    let capacity: f64 = groups.iter().map(|g| 3.0 * g.service_rate).sum();
    QueueModel::new(0.5 * capacity, groups, HoldingCost::linear(1.0))
}

/// The six operating-cost vectors of the robustness study.
pub const ROBUSTNESS_COSTS: [[f64; 3]; 6] = [
    [7.0, 4.0, 3.0],
    [7.0, 4.0, 1.8],
    [7.0, 4.0, 1.0],
    [8.0, 3.0, 1.0],
    [4.0, 3.0, 1.0],
    [18.0, 10.0, 3.0],
];

/// M/M/1 with h(n) = n, server on whenever a customer is present.
/// Closed form: eta = rho/(1-rho) + c rho.
pub fn mm1_instance(lambda: f64, mu: f64, c: f64) -> (QueueModel, Policy) {
    let model = QueueModel::new(
        lambda,
        vec![GroupSpec::new(1, mu, c)],
        HoldingCost::linear(1.0),
    );
    let policy = Policy::new(&model, vec![Action::zeros(1), Action::new(vec![1])]).unwrap();
    (model, policy)
}

// ---------------------------------------------------------------------------
// Randomized small instances
// ---------------------------------------------------------------------------

pub struct InstanceSampler {
    rng: ChaCha12Rng,
}

impl InstanceSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    /// Random stable model with `k_max` groups at most, `m_max` servers per
    /// group, moderate load.
    pub fn model(&mut self, k_max: usize, m_max: u32) -> QueueModel {
        let k = self.rng.gen_range(1..=k_max);
        let groups: Vec<GroupSpec> = (0..k)
            .map(|_| {
                let servers = self.rng.gen_range(1..=m_max);
                let mu = self.rng.gen_range(0.5..6.0);
                let ratio = self.rng.gen_range(0.1..2.5);
                GroupSpec::new(servers, mu, ratio * mu)
            })
            .collect();
        let capacity: f64 = groups.iter().map(|g| g.servers as f64 * g.service_rate).sum();
        let lambda = self.rng.gen_range(0.3..0.8) * capacity;
        let slope = self.rng.gen_range(0.5..2.0);
        QueueModel::new(lambda, groups, HoldingCost::linear(slope))
    }

    /// Random model that satisfies the scale-economies condition by
    /// construction: service rates descending, cost-per-rate ascending.
    pub fn scale_economies_model(&mut self, k_max: usize, m_max: u32) -> QueueModel {
        let k = self.rng.gen_range(1..=k_max);
        let mut mus: Vec<f64> = (0..k).map(|_| self.rng.gen_range(1.0..6.0)).collect();
        mus.sort_by(|a, b| b.total_cmp(a));
        let mut ratios: Vec<f64> = (0..k).map(|_| self.rng.gen_range(0.2..1.6)).collect();
        ratios.sort_by(|a, b| a.total_cmp(b));
        let groups: Vec<GroupSpec> = mus
            .iter()
            .zip(&ratios)
            .map(|(&mu, &r)| GroupSpec::new(self.rng.gen_range(1..=m_max), mu, r * mu))
            .collect();
        let capacity: f64 = groups.iter().map(|g| g.servers as f64 * g.service_rate).sum();
        let lambda = self.rng.gen_range(0.4..0.8) * capacity;
        QueueModel::new(lambda, groups, HoldingCost::linear(1.0))
    }

    /// Random canonical nondecreasing threshold vector for `model`.
    pub fn thresholds(&mut self, model: &QueueModel, max_theta: usize) -> ThresholdPolicy {
        let (_, perm) = check_scale_economies(model);
        let mut ahead = 0usize;
        let mut theta = Vec::with_capacity(model.group_count());
        let mut prev = 1usize;
        for &k in &perm {
            let floor = (ahead + 1).max(prev);
            let t = self.rng.gen_range(floor..=max_theta.max(floor));
            theta.push(t);
            prev = t;
            ahead += model.groups[k].servers as usize;
        }
        ThresholdPolicy::new(theta).unwrap()
    }

    pub fn gen_range(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn gen_u64(&mut self) -> u64 {
        self.rng.gen()
    }
}

// ---------------------------------------------------------------------------
// Dense Poisson oracle
// ---------------------------------------------------------------------------

/// Solve the truncated Poisson equation densely for the gain and the
/// potentials at once: unknowns `(eta, g(1), ..., g(n_max))` with `g(0) = 0`
/// substituted, one equation per generator row. Straight Gaussian
/// elimination with partial pivoting; independent of the production path.
///
/// (Pinning `g(0)` and dropping the top row instead looks natural but is
/// numerically singular here: past the policy frontier the elimination's
/// trailing rows collapse onto a common direction at a geometric rate, so a
/// few dozen constant-rate tail states make the pivot vanish in f64.)
pub fn dense_gain_and_potentials(
    model: &QueueModel,
    policy: &Policy,
    n_max: usize,
) -> (f64, Vec<f64>) {
    let n = n_max + 1; // unknowns: eta, g(1..=n_max)
    let lambda = model.arrival_rate;
    let mut a = vec![vec![0.0f64; n]; n];
    let mut b = vec![0.0f64; n];

    // Unknown x[0] is eta; x[j] is g(j). Row n encodes
    // f(n) - eta + d(n) g(n-1) - (up + d(n)) g(n) + up g(n+1) = 0,
    // with the g(0) terms dropped by the normalization.
    for row in 0..=n_max {
        let d = policy.service_rate(model, row);
        let up = if row < n_max { lambda } else { 0.0 };
        a[row][0] = -1.0;
        if row >= 2 {
            a[row][row - 1] = d;
        }
        if row >= 1 {
            a[row][row] = -(up + d);
        }
        if row < n_max {
            a[row][row + 1] = up;
        }
        b[row] = -policy.cost_rate(model, row);
    }

    gaussian_solve(&mut a, &mut b);
    let eta = b[0];
    let mut g = vec![0.0; n_max + 1];
    g[1..=n_max].copy_from_slice(&b[1..=n_max]);
    (eta, g)
}

fn gaussian_solve(a: &mut [Vec<f64>], b: &mut [f64]) {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        assert!(
            a[col][col].abs() > 1e-300,
            "singular system at column {col}"
        );
        for row in (col + 1)..n {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for j in col..n {
                    a[row][j] -= factor * a[col][j];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    for row in (0..n).rev() {
        let mut sum = b[row];
        for j in (row + 1)..n {
            sum -= a[row][j] * b[j];
        }
        b[row] = sum / a[row][row];
    }
}

// ---------------------------------------------------------------------------
// Exhaustive ILP oracle
// ---------------------------------------------------------------------------

/// Minimal objective value of the per-state integer program, by enumeration.
pub fn ilp_exhaustive_best(model: &QueueModel, n: usize, g_diff: f64) -> f64 {
    let mut best = f64::INFINITY;
    let mut counts = vec![0u32; model.group_count()];
    recurse_actions(model, n, 0, &mut counts, &mut |counts| {
        let value: f64 = counts
            .iter()
            .enumerate()
            .map(|(k, &c)| c as f64 * activation_index(model, k, g_diff))
            .sum();
        if value < best {
            best = value;
        }
    });
    best
}

pub fn ilp_objective(model: &QueueModel, action: &Action, g_diff: f64) -> f64 {
    action
        .counts
        .iter()
        .enumerate()
        .map(|(k, &c)| c as f64 * activation_index(model, k, g_diff))
        .sum()
}

fn recurse_actions<F: FnMut(&[u32])>(
    model: &QueueModel,
    n: usize,
    k: usize,
    counts: &mut Vec<u32>,
    visit: &mut F,
) {
    if k == model.group_count() {
        if counts.iter().map(|&c| c as usize).sum::<usize>() <= n {
            visit(counts);
        }
        return;
    }
    for c in 0..=model.groups[k].servers {
        counts[k] = c;
        recurse_actions(model, n, k + 1, counts, visit);
    }
    counts[k] = 0;
}

// ---------------------------------------------------------------------------
// Fixed-point structural invariants
// ---------------------------------------------------------------------------

pub const STRUCT_SLACK: f64 = 1e-8;

/// Check the structural properties a converged solution must satisfy on
/// `[0, frontier + 10]`: potentials increasing and convex, PRF nonnegative
/// and nondecreasing, total working servers nondecreasing, quasi-bang-bang
/// action shape, and nested economic sets. Returns human-readable violations.
pub fn fixed_point_violations(
    model: &QueueModel,
    policy: &Policy,
    report: &SolveReport,
) -> Vec<String> {
    let mut violations = Vec::new();
    let window = (policy.frontier() + 10).min(report.truncation.saturating_sub(1));
    let g = &report.g;
    let prf = &report.prf;

    for n in 1..=window {
        if g[n] - g[n - 1] < -STRUCT_SLACK {
            violations.push(format!("g not increasing at n={n}: {}", g[n] - g[n - 1]));
        }
        if n >= 2 && g[n] - 2.0 * g[n - 1] + g[n - 2] < -STRUCT_SLACK {
            violations.push(format!(
                "g not convex at n={}: {}",
                n - 1,
                g[n] - 2.0 * g[n - 1] + g[n - 2]
            ));
        }
        if prf[n] < -STRUCT_SLACK {
            violations.push(format!("G negative at n={n}: {}", prf[n]));
        }
        if n >= 2 && prf[n] - prf[n - 1] < -STRUCT_SLACK {
            violations.push(format!(
                "G not nondecreasing at n={n}: step {}",
                prf[n] - prf[n - 1]
            ));
        }
    }

    for n in 0..window {
        let here = policy.action(n).total();
        let next = policy.action(n + 1).total();
        if next < here {
            violations.push(format!(
                "total servers decrease from {here} to {next} at n={}",
                n + 1
            ));
        }
    }

    for n in 1..=window {
        if let Some(v) = quasi_bang_bang_violation(model, policy.action(n), n, prf[n]) {
            violations.push(format!("state {n}: {v}"));
        }
    }

    // Economic sets grow with n.
    for n in 1..window {
        for k in 0..model.group_count() {
            let economic_now = prf[n] > effective_ratio(model, k);
            let economic_next = prf[n + 1] > effective_ratio(model, k) - STRUCT_SLACK;
            if economic_now && !economic_next {
                violations.push(format!("economic set loses group {k} from n={n} to n={}", n + 1));
            }
        }
    }

    violations
}

/// Check one action against the quasi-bang-bang form: in ascending order of
/// the activation index, a prefix of fully-on groups, at most one partial
/// group (and only when the efficiency constraint binds), then all off; no
/// servers in groups with nonnegative index.
pub fn quasi_bang_bang_violation(
    model: &QueueModel,
    action: &Action,
    n: usize,
    g_value: f64,
) -> Option<String> {
    let k = model.group_count();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        activation_index(model, a, g_value)
            .total_cmp(&activation_index(model, b, g_value))
            .then(a.cmp(&b))
    });

    let total: u32 = action.total();
    let mut seen_partial = false;
    let mut seen_off = false;
    for &j in &order {
        let count = action.counts[j];
        let full = count == model.groups[j].servers;
        let index = activation_index(model, j, g_value);
        if count > 0 && index >= 0.0 {
            return Some(format!(
                "group {j} runs {count} servers with nonnegative index {index}"
            ));
        }
        if count == 0 {
            // Off is fine if the group is uneconomic or everything ahead
            // already absorbed the customers.
            if index < 0.0 && (total as usize) < n {
                return Some(format!(
                    "group {j} is off with negative index {index} and spare customers"
                ));
            }
            seen_off = true;
            continue;
        }
        if seen_off {
            return Some(format!("group {j} runs servers after an off group"));
        }
        if seen_partial {
            return Some(format!("second partial/full group {j} after a partial one"));
        }
        if !full {
            if (total as usize) != n {
                return Some(format!(
                    "group {j} is partial ({count}) without a binding efficiency constraint"
                ));
            }
            seen_partial = true;
        }
    }
    None
}

/// Worst absolute disagreement between the two PRF routes on `[1, upto]`.
pub fn prf_route_disagreement(
    model: &QueueModel,
    policy: &Policy,
    report: &SolveReport,
    upto: usize,
) -> f64 {
    let fwd = prf_forward(model, policy, report.eta, report.truncation);
    let mut worst = 0.0f64;
    for n in 1..=upto.min(report.truncation) {
        worst = worst.max((fwd[n] - report.prf[n]).abs());
    }
    worst
}

/// Worst |G(n) - (g(n) - g(n-1))| over the full retained range.
pub fn prf_consistency(report: &SolveReport) -> f64 {
    let mut worst = 0.0f64;
    for n in 1..=report.truncation {
        worst = worst.max((report.prf[n] - (report.g[n] - report.g[n - 1])).abs());
    }
    worst
}
