//! Domain types for the group-server queue: server groups, holding costs,
//! the queue model itself, scheduling actions, and policies.
//!
//! A model describes a single FCFS queue with Poisson arrivals served by `K`
//! groups of exponential servers. Servers are homogeneous within a group
//! (per-server rate `mu_k`, per-server operating cost `c_k`) and heterogeneous
//! across groups. A policy maps the queue length `n` to the number of working
//! servers in each group.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One homogeneous group of servers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    /// Number of servers in the group (`M_k`).
    pub servers: u32,
    /// Service rate per working server (`mu_k`).
    pub service_rate: f64,
    /// Operating cost per working server per unit time (`c_k`).
    pub cost_rate: f64,
}

impl GroupSpec {
    pub fn new(servers: u32, service_rate: f64, cost_rate: f64) -> Self {
        Self {
            servers,
            service_rate,
            cost_rate,
        }
    }

    /// Operating cost per unit of service rate. Groups with a smaller ratio
    /// are the better bargain and get activation priority under the c/mu rule.
    pub fn cost_per_rate(&self) -> f64 {
        self.cost_rate / self.service_rate
    }
}

/// Holding-cost function `h(n)`: cost per unit time of keeping `n` customers
/// in the system. Must be nondecreasing, convex, and unbounded for the
/// optimization theory to apply; `validate` checks the first two by finite
/// differences and the last structurally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HoldingCost {
    /// `h(n) = slope * n`.
    Linear { slope: f64 },
    /// `h(n) = coeff * n^exponent + intercept`.
    Power {
        coeff: f64,
        exponent: f64,
        intercept: f64,
    },
    /// Explicit values for `n = 0, 1, ..., len-1`, extended past the table
    /// end with the declared slope.
    Table { values: Vec<f64>, slope: f64 },
}

impl HoldingCost {
    pub fn linear(slope: f64) -> Self {
        HoldingCost::Linear { slope }
    }

    pub fn power(coeff: f64, exponent: f64, intercept: f64) -> Self {
        HoldingCost::Power {
            coeff,
            exponent,
            intercept,
        }
    }

    pub fn table(values: Vec<f64>, slope: f64) -> Self {
        HoldingCost::Table { values, slope }
    }

    /// Evaluate `h(n)`.
    pub fn evaluate(&self, n: usize) -> f64 {
        match self {
            HoldingCost::Linear { slope } => slope * n as f64,
            HoldingCost::Power {
                coeff,
                exponent,
                intercept,
            } => coeff * (n as f64).powf(*exponent) + intercept,
            HoldingCost::Table { values, slope } => {
                if n < values.len() {
                    values[n]
                } else {
                    let last = values.len().saturating_sub(1);
                    values.last().copied().unwrap_or(0.0) + slope * (n - last) as f64
                }
            }
        }
    }
}

/// The group-server queue model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueModel {
    /// Poisson arrival rate `lambda`.
    pub arrival_rate: f64,
    /// Server groups, in the order supplied by the user. Optimizers sort by
    /// c/mu internally and report the permutation; this order is preserved
    /// everywhere else so results map back to user-facing indices.
    pub groups: Vec<GroupSpec>,
    /// Holding-cost function.
    pub holding: HoldingCost,
    /// Weight `v` applied to the operating cost, so the total cost rate is
    /// `h(n) + v * sum_k m_k c_k`. Defaults to 1.
    pub operating_weight: f64,
}

impl QueueModel {
    pub fn new(arrival_rate: f64, groups: Vec<GroupSpec>, holding: HoldingCost) -> Self {
        Self {
            arrival_rate,
            groups,
            holding,
            operating_weight: 1.0,
        }
    }

    pub fn with_weight(mut self, operating_weight: f64) -> Self {
        self.operating_weight = operating_weight;
        self
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    /// Total number of servers across all groups.
    pub fn total_servers(&self) -> u32 {
        self.groups.iter().map(|g| g.servers).sum()
    }

    /// Maximum total service rate, with every server on.
    pub fn capacity(&self) -> f64 {
        self.groups
            .iter()
            .map(|g| g.servers as f64 * g.service_rate)
            .sum()
    }

    /// Holding cost rate `h(n)`.
    pub fn holding_cost(&self, n: usize) -> f64 {
        self.holding.evaluate(n)
    }

    /// Weighted operating cost rate of an action: `v * sum_k m_k c_k`.
    pub fn operating_cost(&self, action: &Action) -> f64 {
        self.operating_weight
            * action
                .counts
                .iter()
                .zip(&self.groups)
                .map(|(&m, g)| m as f64 * g.cost_rate)
                .sum::<f64>()
    }

    /// Total cost rate `f(n, m) = h(n) + v * m c`.
    ///
    /// `m` must respect the per-group server bounds. The efficiency
    /// constraint (`sum_k m_k <= n`) is a property of policies, not of the
    /// cost function, so it is not enforced here.
    pub fn total_cost_rate(&self, n: usize, action: &Action) -> Result<f64> {
        if action.counts.len() != self.group_count() {
            return Err(Error::Domain(format!(
                "action has {} groups, model has {}",
                action.counts.len(),
                self.group_count()
            )));
        }
        for (k, (&m, g)) in action.counts.iter().zip(&self.groups).enumerate() {
            if m > g.servers {
                return Err(Error::Domain(format!(
                    "action turns on {m} servers in group {k} but only {} exist",
                    g.servers
                )));
            }
        }
        Ok(self.holding_cost(n) + self.operating_cost(action))
    }

    /// Total service rate of an action: `sum_k m_k mu_k`.
    pub fn service_rate(&self, action: &Action) -> f64 {
        action
            .counts
            .iter()
            .zip(&self.groups)
            .map(|(&m, g)| m as f64 * g.service_rate)
            .sum()
    }

    /// Semantic validation: stability capacity, positive rates, holding-cost
    /// shape. Report-style; never fails hard.
    pub fn validate(&self) -> ValidationReport {
        self.validate_to(Self::default_sample_range(&self.holding))
    }

    /// As `validate`, sampling the holding cost on `[0, sample_to]`.
    pub fn validate_to(&self, sample_to: usize) -> ValidationReport {
        let mut violations = Vec::new();

        if self.groups.is_empty() {
            violations.push(Violation::NoGroups);
        }
        if !(self.arrival_rate > 0.0) || !self.arrival_rate.is_finite() {
            violations.push(Violation::NonpositiveRate {
                field: "lambda".into(),
                value: self.arrival_rate,
            });
        }
        if !(self.operating_weight >= 0.0) || !self.operating_weight.is_finite() {
            violations.push(Violation::NonpositiveRate {
                field: "v".into(),
                value: self.operating_weight,
            });
        }
        for (k, g) in self.groups.iter().enumerate() {
            if g.servers == 0 {
                violations.push(Violation::NoServers { group: k });
            }
            if !(g.service_rate > 0.0) || !g.service_rate.is_finite() {
                violations.push(Violation::NonpositiveRate {
                    field: format!("groups[{k}].mu"),
                    value: g.service_rate,
                });
            }
            if !(g.cost_rate >= 0.0) || !g.cost_rate.is_finite() {
                violations.push(Violation::NonpositiveRate {
                    field: format!("groups[{k}].c"),
                    value: g.cost_rate,
                });
            }
        }

        // Stability needs strictly more all-on capacity than load.
        let capacity = self.capacity();
        if !(self.arrival_rate < capacity) {
            violations.push(Violation::Capacity {
                lambda: self.arrival_rate,
                capacity,
            });
        }

        violations.extend(check_holding_shape(&self.holding, sample_to));

        ValidationReport { violations }
    }

    fn default_sample_range(holding: &HoldingCost) -> usize {
        match holding {
            HoldingCost::Table { values, .. } => values.len().saturating_add(8).max(256),
            _ => 256,
        }
    }
}

/// Structural and sampled checks on the holding-cost function.
fn check_holding_shape(holding: &HoldingCost, sample_to: usize) -> Vec<Violation> {
    let mut violations = Vec::new();
    match holding {
        HoldingCost::Linear { slope } => {
            if !(*slope > 0.0) || !slope.is_finite() {
                violations.push(Violation::HoldingNotUnbounded {
                    detail: format!("linear slope {slope} must be positive"),
                });
            }
        }
        HoldingCost::Power {
            coeff, exponent, ..
        } => {
            if !(*coeff > 0.0) || !coeff.is_finite() {
                violations.push(Violation::HoldingNotUnbounded {
                    detail: format!("power coefficient {coeff} must be positive"),
                });
            }
            if !(*exponent >= 1.0) || !exponent.is_finite() {
                violations.push(Violation::HoldingNotUnbounded {
                    detail: format!("power exponent {exponent} must be at least 1"),
                });
            }
        }
        HoldingCost::Table { values, slope } => {
            if values.is_empty() {
                violations.push(Violation::HoldingNotUnbounded {
                    detail: "holding-cost table is empty".into(),
                });
            }
            if !(*slope > 0.0) || !slope.is_finite() {
                violations.push(Violation::HoldingNotUnbounded {
                    detail: format!("table extrapolation slope {slope} must be positive"),
                });
            }
        }
    }
    if !violations.is_empty() {
        return violations;
    }

    // Finite-difference check of "nondecreasing and convex" on the sampled
    // range: h(n+1) - h(n) >= h(n) - h(n-1) >= 0, with an ulp-scale slack so
    // exactly linear costs with non-representable slopes pass.
    let mut prev_inc: Option<f64> = None;
    for n in 1..=sample_to {
        let lo = holding.evaluate(n - 1);
        let hi = holding.evaluate(n);
        if !hi.is_finite() || !lo.is_finite() {
            violations.push(Violation::HoldingNotFinite { state: n });
            break;
        }
        let slack = 1e-12 * hi.abs().max(1.0);
        let inc = hi - lo;
        if inc < -slack {
            violations.push(Violation::HoldingDecreasing { state: n });
            break;
        }
        if let Some(p) = prev_inc {
            if inc < p - slack {
                violations.push(Violation::HoldingNotConvex { state: n });
                break;
            }
        }
        prev_inc = Some(inc);
    }
    violations
}

/// A named validation violation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    /// `lambda >= sum_k M_k mu_k`: no all-on tail can stabilize the queue.
    Capacity { lambda: f64, capacity: f64 },
    /// A rate or weight that must be positive (or nonnegative) is not.
    NonpositiveRate { field: String, value: f64 },
    /// A group with zero servers.
    NoServers { group: usize },
    /// The model has no groups at all.
    NoGroups,
    /// Sampled increments of h decreased at `state`.
    HoldingDecreasing { state: usize },
    /// Sampled increments of h shrank at `state` (concavity).
    HoldingNotConvex { state: usize },
    /// h evaluated to a non-finite value at `state`.
    HoldingNotFinite { state: usize },
    /// Structural unboundedness check failed (nonpositive slope/coefficient).
    HoldingNotUnbounded { detail: String },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Capacity { lambda, capacity } => write!(
                f,
                "capacity: lambda = {lambda} is not below the all-on service rate {capacity}"
            ),
            Violation::NonpositiveRate { field, value } => {
                write!(f, "field {field} has invalid value {value}")
            }
            Violation::NoServers { group } => write!(f, "group {group} has zero servers"),
            Violation::NoGroups => write!(f, "model has no server groups"),
            Violation::HoldingDecreasing { state } => {
                write!(f, "holding cost decreases at n = {state}")
            }
            Violation::HoldingNotConvex { state } => {
                write!(f, "holding cost is not convex at n = {state}")
            }
            Violation::HoldingNotFinite { state } => {
                write!(f, "holding cost is not finite at n = {state}")
            }
            Violation::HoldingNotUnbounded { detail } => write!(f, "{detail}"),
        }
    }
}

/// Outcome of model validation.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Working-server counts for each group at one state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub counts: Vec<u32>,
}

impl Action {
    pub fn new(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    pub fn zeros(k: usize) -> Self {
        Self {
            counts: vec![0; k],
        }
    }

    /// Every server in every group on.
    pub fn all_on(model: &QueueModel) -> Self {
        Self {
            counts: model.groups.iter().map(|g| g.servers).collect(),
        }
    }

    /// Total number of working servers.
    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn is_all_on(&self, model: &QueueModel) -> bool {
        self.counts
            .iter()
            .zip(&model.groups)
            .all(|(&m, g)| m == g.servers)
    }

    /// Bounds and efficiency check at state `n`: `0 <= m_k <= M_k` and
    /// `sum_k m_k <= n`.
    pub fn is_efficient_at(&self, model: &QueueModel, n: usize) -> bool {
        self.counts.len() == model.group_count()
            && self
                .counts
                .iter()
                .zip(&model.groups)
                .all(|(&m, g)| m <= g.servers)
            && self.total() as usize <= n
    }
}

/// A stationary scheduling policy on the truncated state space: an explicit
/// action for every `n` up to the frontier, all-on beyond it.
///
/// The stored table is normalized so the frontier is the *first* state whose
/// action (and every later one) is all-on; policy equality is therefore
/// well-defined.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Policy {
    actions: Vec<Action>,
    frontier: usize,
}

impl Policy {
    /// Build a policy from an explicit action table for `n = 0..actions.len()-1`.
    /// The last entry must be all-on; every entry must be efficient at its state.
    pub fn new(model: &QueueModel, actions: Vec<Action>) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::Domain("policy table is empty".into()));
        }
        for (n, a) in actions.iter().enumerate() {
            if !a.is_efficient_at(model, n) {
                return Err(Error::Domain(format!(
                    "action {:?} is not efficient at state {n}",
                    a.counts
                )));
            }
        }
        if !actions.last().unwrap().is_all_on(model) {
            return Err(Error::Domain(
                "last policy action must turn on all servers".into(),
            ));
        }
        // Normalize: cut the table at the first all-on action that is
        // followed only by all-on actions.
        let mut frontier = actions.len() - 1;
        while frontier > 0 && actions[frontier - 1].is_all_on(model) {
            frontier -= 1;
        }
        let mut actions = actions;
        actions.truncate(frontier + 1);
        Ok(Self { actions, frontier })
    }

    /// Smallest state at which every server is on.
    pub fn frontier(&self) -> usize {
        self.frontier
    }

    /// Action at state `n`; all-on past the frontier.
    pub fn action(&self, n: usize) -> &Action {
        if n >= self.frontier {
            &self.actions[self.frontier]
        } else {
            &self.actions[n]
        }
    }

    /// Total service rate `d(n) mu` at state `n`.
    pub fn service_rate(&self, model: &QueueModel, n: usize) -> f64 {
        model.service_rate(self.action(n))
    }

    /// Total cost rate `f(n, d(n))` at state `n`.
    pub fn cost_rate(&self, model: &QueueModel, n: usize) -> f64 {
        model.holding_cost(n) + model.operating_cost(self.action(n))
    }
}

/// A multi-threshold policy in the ascending-c/mu group ordering: group `k`
/// (sorted) is activated as fully as the efficiency constraint allows once
/// `n >= thresholds[k]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    thresholds: Vec<usize>,
}

impl ThresholdPolicy {
    pub fn new(thresholds: Vec<usize>) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::Domain("threshold vector is empty".into()));
        }
        if thresholds.contains(&0) {
            return Err(Error::Domain("thresholds must be positive".into()));
        }
        if thresholds.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Domain(format!(
                "thresholds {thresholds:?} are not nondecreasing"
            )));
        }
        Ok(Self { thresholds })
    }

    pub fn thresholds(&self) -> &[usize] {
        &self.thresholds
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1_model() -> QueueModel {
        QueueModel::new(
            10.0,
            vec![
                GroupSpec::new(3, 6.0, 7.0),
                GroupSpec::new(4, 4.0, 4.0),
                GroupSpec::new(3, 2.0, 3.0),
            ],
            HoldingCost::linear(1.0),
        )
    }

    #[test]
    fn validate_passes_on_stable_model() {
        let report = example1_model().validate();
        assert!(report.passed(), "violations: {:?}", report.violations);
        // capacity 40 comfortably above lambda 10
        assert_eq!(example1_model().capacity(), 40.0);
    }

    #[test]
    fn validate_rejects_capacity_boundary() {
        let mut m = example1_model();
        m.arrival_rate = 40.0; // exactly the capacity: not strictly below
        let report = m.validate();
        assert!(!report.passed());
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Capacity { .. })));
    }

    #[test]
    fn validate_rejects_concave_table() {
        let mut m = example1_model();
        m.holding = HoldingCost::table(vec![0.0, 1.0, 1.5], 1.0);
        let report = m.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::HoldingNotConvex { state: 2 })));
    }

    #[test]
    fn validate_names_nonpositive_rates() {
        let mut m = example1_model();
        m.arrival_rate = -1.0;
        let report = m.validate();
        assert!(report.violations.iter().any(
            |v| matches!(v, Violation::NonpositiveRate { field, .. } if field == "lambda")
        ));
    }

    #[test]
    fn holding_cost_forms() {
        let m = example1_model();
        assert_eq!(m.holding_cost(7), 7.0);
        assert_eq!(m.holding_cost(0), 0.0);

        let p = HoldingCost::power(1.0, 2.0, 0.0);
        assert_eq!(p.evaluate(3), 9.0);
        assert_eq!(p.evaluate(0), 0.0);

        let t = HoldingCost::table(vec![0.0, 2.0, 5.0], 4.0);
        assert_eq!(t.evaluate(1), 2.0);
        assert_eq!(t.evaluate(2), 5.0);
        assert_eq!(t.evaluate(4), 13.0); // 5 + 4 * 2
    }

    #[test]
    fn total_cost_rate_example_values() {
        let m = example1_model();
        let a = Action::new(vec![3, 4, 3]);
        assert_eq!(m.total_cost_rate(12, &a).unwrap(), 58.0);
        assert_eq!(m.total_cost_rate(0, &Action::zeros(3)).unwrap(), 0.0);

        // Weighted variant: v = 2 doubles the operating part.
        let w = example1_model().with_weight(2.0);
        let one_fast = Action::new(vec![1, 0, 0]);
        assert_eq!(w.total_cost_rate(0, &one_fast).unwrap(), 14.0);
    }

    #[test]
    fn total_cost_rate_rejects_out_of_bounds_action() {
        let m = example1_model();
        let too_many = Action::new(vec![4, 0, 0]);
        assert!(m.total_cost_rate(5, &too_many).is_err());
        let wrong_len = Action::new(vec![1, 1]);
        assert!(m.total_cost_rate(5, &wrong_len).is_err());
    }

    #[test]
    fn cost_rate_is_additive_in_operating_cost() {
        let m = example1_model().with_weight(1.5);
        let a = Action::new(vec![2, 1, 3]);
        let with = m.total_cost_rate(9, &a).unwrap();
        let without = m.total_cost_rate(9, &Action::zeros(3)).unwrap();
        let direct = 1.5 * (2.0 * 7.0 + 1.0 * 4.0 + 3.0 * 3.0);
        assert_eq!(with - without, direct);
    }

    #[test]
    fn policy_normalizes_frontier() {
        let m = example1_model();
        let zeros = Action::zeros(3);
        let all = Action::all_on(&m);
        // all-on from state 10 on; table padded with redundant all-on rows
        let mut actions: Vec<Action> = Vec::new();
        for n in 0..=9 {
            let mut take = n.min(10) as u32;
            let mut counts = vec![0u32; 3];
            for (k, g) in m.groups.iter().enumerate() {
                let t = take.min(g.servers);
                counts[k] = t;
                take -= t;
            }
            actions.push(Action::new(counts));
        }
        actions.push(all.clone());
        actions.push(all.clone());
        actions.push(all.clone());
        let p = Policy::new(&m, actions).unwrap();
        assert_eq!(p.frontier(), 10);
        assert_eq!(p.action(10), &all);
        assert_eq!(p.action(500), &all);
        assert_eq!(p.action(0), &zeros);
    }

    #[test]
    fn policy_rejects_inefficient_action() {
        let m = example1_model();
        let mut actions = vec![Action::new(vec![1, 0, 0])]; // 1 server at n = 0
        actions.push(Action::all_on(&m));
        assert!(Policy::new(&m, actions).is_err());
    }

    #[test]
    fn threshold_policy_must_be_nondecreasing() {
        assert!(ThresholdPolicy::new(vec![1, 9, 21]).is_ok());
        assert!(ThresholdPolicy::new(vec![2, 1]).is_err());
        assert!(ThresholdPolicy::new(vec![0, 1]).is_err());
        assert!(ThresholdPolicy::new(vec![]).is_err());
    }
}
