//! Property tests over randomized small instances: cost additivity, greedy
//! optimality against exhaustive enumeration, threshold-policy structure,
//! evaluation soundness, and agreement with a dense linear-solve oracle.

mod common;

use common::{dense_gain_and_potentials, ilp_exhaustive_best, ilp_objective};
use gsq_core::*;
use proptest::prelude::*;

/// The forward PRF recursion agrees with the stable route while its error
/// amplification (the running product of `d(n)mu / lambda`) stays moderate;
/// these windows are chosen inside that horizon.
#[test]
fn forward_route_agrees_within_its_stable_horizon() {
    // Converged reference policy, states 1..=15.
    let model = QueueModel::new(
        10.0,
        vec![
            GroupSpec::new(3, 6.0, 7.0),
            GroupSpec::new(4, 4.0, 4.0),
            GroupSpec::new(3, 2.0, 3.0),
        ],
        HoldingCost::linear(1.0),
    );
    let sol = optimize_index_policy(&model, &SolveOptions::default()).unwrap();
    let fwd = prf_forward(&model, &sol.policy, sol.report.eta, sol.report.truncation);
    for n in 1..=15 {
        assert!(
            (fwd[n] - sol.report.prf[n]).abs() < 1e-6,
            "G({n}): {} vs {}",
            fwd[n],
            sol.report.prf[n]
        );
    }

    // M/M/1, states 1..=30.
    let (mm1, policy) = common::mm1_instance(1.0, 2.0, 3.0);
    let report = evaluate_policy(&mm1, &policy, &TruncationOptions::default()).unwrap();
    let fwd = prf_forward(&mm1, &policy, report.eta, report.truncation);
    for n in 1..=30 {
        assert!((fwd[n] - report.prf[n]).abs() < 1e-6, "mm1 G({n})");
    }
}

/// At a fixed point, no single-state action swap can improve the policy:
/// every converged action attains the exhaustive minimum of its per-state
/// integer program under the converged PRF, including the all-on extension
/// past the frontier.
#[test]
fn converged_actions_solve_their_own_state_programs() {
    let mut models = vec![
        common::three_group_model([7.0, 4.0, 3.0]),
        common::three_group_model([7.0, 4.0, 1.8]),
        common::cmu_model(10.0),
    ];
    let mut sampler = common::InstanceSampler::new(0x5eed_0002);
    for _ in 0..3 {
        models.push(sampler.model(3, 3));
    }

    for model in models {
        let sol = optimize_index_policy(&model, &SolveOptions::default()).unwrap();
        for n in 0..=sol.policy.frontier() + 10 {
            let achieved = ilp_objective(&model, sol.policy.action(n), sol.report.prf[n]);
            let best = ilp_exhaustive_best(&model, n, sol.report.prf[n]);
            assert!(
                achieved <= best + 1e-9,
                "state {n}: action {:?} scores {achieved}, exhaustive best {best}",
                sol.policy.action(n).counts
            );
        }
    }
}

/// The standalone potentials op agrees with the evaluation pipeline.
#[test]
fn potentials_op_matches_report() {
    let (model, policy) = common::mm1_instance(1.0, 2.0, 3.0);
    let report = evaluate_policy(&model, &policy, &TruncationOptions::default()).unwrap();
    let g = potentials(&model, &policy, &report.pi, report.eta).unwrap();
    for n in 0..=report.truncation {
        assert!((g[n] - report.g[n]).abs() <= 1e-12 * report.g[n].abs().max(1.0));
    }
}

#[derive(Debug, Clone)]
struct SmallModel(QueueModel);

fn small_model() -> impl Strategy<Value = SmallModel> {
    let group = (1u32..=5, 0.5f64..6.0, 0.1f64..2.5)
        .prop_map(|(servers, mu, ratio)| GroupSpec::new(servers, mu, ratio * mu));
    let holding = prop_oneof![
        (0.5f64..2.0).prop_map(HoldingCost::linear),
        (0.2f64..1.5, 1.0f64..2.0).prop_map(|(a, p)| HoldingCost::power(a, p, 0.0)),
    ];
    (prop::collection::vec(group, 1..=4), holding, 0.3f64..0.85)
        .prop_map(|(groups, holding, load)| {
            let capacity: f64 = groups
                .iter()
                .map(|g| g.servers as f64 * g.service_rate)
                .sum();
            SmallModel(QueueModel::new(load * capacity, groups, holding))
        })
        .prop_filter("validated", |m| m.0.validate().passed())
}

fn action_for(model: &QueueModel, seed: u64) -> Action {
    let counts = model
        .groups
        .iter()
        .enumerate()
        .map(|(k, g)| ((seed >> (k * 8)) % (g.servers as u64 + 1)) as u32)
        .collect();
    Action::new(counts)
}

/// Nondecreasing thresholds with each entry at least 1.
fn thresholds_for(model: &QueueModel, raw: &[usize]) -> ThresholdPolicy {
    let k = model.group_count();
    let mut theta: Vec<usize> = (0..k).map(|j| 1 + raw[j % raw.len()] % 12).collect();
    theta.sort_unstable();
    ThresholdPolicy::new(theta).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    /// Switching servers on changes the cost rate by exactly the weighted
    /// operating cost (machine precision; no hidden coupling with h).
    #[test]
    fn cost_rate_is_additive(model in small_model(), n in 0usize..200, seed in any::<u64>()) {
        let m = model.0;
        let action = action_for(&m, seed);
        let with = m.total_cost_rate(n, &action).unwrap();
        let without = m.total_cost_rate(n, &Action::zeros(m.group_count())).unwrap();
        let expected = m.operating_cost(&action);
        let slack = 2.0 * f64::EPSILON * (with.abs() + expected.abs()).max(1.0);
        prop_assert!(
            ((with - without) - expected).abs() <= slack,
            "difference {} vs operating cost {}",
            with - without,
            expected
        );
    }

    /// The greedy fill solves the per-state integer program exactly.
    #[test]
    fn greedy_fill_is_optimal(
        model in small_model(),
        n in 0usize..15,
        g_diff in -1.0f64..6.0,
    ) {
        let m = model.0;
        let greedy = ilp_objective(&m, &ilp_greedy(&m, n, g_diff), g_diff);
        let best = ilp_exhaustive_best(&m, n, g_diff);
        prop_assert!((greedy - best).abs() <= 1e-12, "greedy {greedy} vs best {best}");
    }

    /// Threshold policies activate exactly the gated capacity, never exceed
    /// the efficiency constraint, and have monotone totals.
    #[test]
    fn threshold_policy_structure(model in small_model(), raw in prop::collection::vec(0usize..40, 1..=4)) {
        let m = model.0;
        let theta = thresholds_for(&m, &raw);
        let policy = threshold_to_policy(&m, &theta).unwrap();
        let (_, perm) = check_scale_economies(&m);

        let frontier_expected = (*theta.thresholds().last().unwrap()).max(m.total_servers() as usize);
        prop_assert_eq!(policy.frontier(), frontier_expected);

        for n in 0..=frontier_expected + 5 {
            let total = policy.action(n).total() as usize;
            let allowed: usize = perm
                .iter()
                .enumerate()
                .filter(|(j, _)| n >= theta.thresholds()[*j])
                .map(|(_, &k)| m.groups[k].servers as usize)
                .sum();
            prop_assert_eq!(total, n.min(allowed), "state {}", n);
            if n > 0 {
                prop_assert!(policy.action(n).total() >= policy.action(n - 1).total());
            }
        }
    }

    /// Exact evaluation produces a normalized positive-recurrent
    /// distribution, balanced generator, small Poisson residual, and a PRF
    /// that is exactly the difference of the potentials.
    #[test]
    fn evaluation_is_sound(model in small_model(), raw in prop::collection::vec(0usize..12, 1..=4)) {
        let m = model.0;
        let theta = thresholds_for(&m, &raw);
        let policy = threshold_to_policy(&m, &theta).unwrap();
        let report = evaluate_policy(&m, &policy, &TruncationOptions::default()).unwrap();

        let total: f64 = report.pi.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12, "pi sums to {total}");
        prop_assert!(report.pi.iter().all(|&p| p >= 0.0));
        prop_assert!(report.tail_mass < 1e-12);

        let chain = build_chain(&m, &policy, report.truncation).unwrap();
        prop_assert!(balance_residual(&chain, &report.pi) <= 1e-9);
        prop_assert!(poisson_residual(&m, &policy, &report) <= 1e-8);

        for n in 1..=report.truncation {
            prop_assert_eq!(report.prf[n], report.g[n] - report.g[n - 1]);
        }
    }

    /// The production gain and potentials match an independent dense linear
    /// solve of the same truncated system.
    #[test]
    fn potentials_match_dense_oracle(model in small_model(), raw in prop::collection::vec(0usize..10, 1..=3)) {
        let m = model.0;
        let theta = thresholds_for(&m, &raw);
        let policy = threshold_to_policy(&m, &theta).unwrap();
        let n_max = policy.frontier() + 40;
        let report = evaluate_at(&m, &policy, n_max).unwrap();
        let (dense_eta, dense_g) = dense_gain_and_potentials(&m, &policy, n_max);
        prop_assert!(
            (report.eta - dense_eta).abs() <= 1e-8 * report.eta.abs().max(1.0),
            "eta {} vs dense {}",
            report.eta,
            dense_eta
        );
        let scale = dense_g.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        for n in 0..=n_max {
            prop_assert!(
                (report.g[n] - dense_g[n]).abs() <= 1e-8 * scale,
                "g({}) = {} vs dense {}",
                n,
                report.g[n],
                dense_g[n]
            );
        }
    }

    /// Raising each threshold to the first state where its group can receive
    /// a server leaves the induced policy unchanged.
    #[test]
    fn gated_thresholds_are_policy_equivalent(model in small_model(), raw in prop::collection::vec(0usize..12, 1..=4)) {
        let m = model.0;
        let theta = thresholds_for(&m, &raw);
        let (_, perm) = check_scale_economies(&m);
        let mut ahead = 0usize;
        let mut canonical = Vec::new();
        let mut prev = 1usize;
        for (j, &k) in perm.iter().enumerate() {
            let t = theta.thresholds()[j].max(ahead + 1).max(prev);
            canonical.push(t);
            prev = t;
            ahead += m.groups[k].servers as usize;
        }
        let canonical = ThresholdPolicy::new(canonical).unwrap();
        let a = threshold_to_policy(&m, &theta).unwrap();
        let b = threshold_to_policy(&m, &canonical).unwrap();
        prop_assert_eq!(a, b);
    }
}
