//! Built-in experiment suites: the reference parameter studies on the
//! three-group system plus the scalability family.

use std::path::Path;

use anyhow::Result;
use gsq_core::*;
use serde_json::{json, Value};

use crate::report::{
    eta_entry, solution_tables, trace_rows, write_curves_csv, write_policy_csv, write_table_csv,
    write_trace_csv, TABLE_MARGIN,
};

pub const SUITE_NAMES: [&str; 6] = ["ex1", "ex2", "ex3", "ex4", "ex5", "ex6"];

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

pub fn cmu_model(lambda: f64) -> QueueModel {
    let mut m = three_group_model([7.0, 8.0, 5.0]);
    m.arrival_rate = lambda;
    m
}

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

/// Run one named suite; returns the model the report echoes (a
/// representative one for sweeps) and the results block, and writes suite
/// CSVs when `csv_dir` is given.
pub fn run_suite(
    name: &str,
    opts: &SolveOptions,
    csv_dir: Option<&Path>,
) -> Result<(QueueModel, Value)> {
    match name {
        "ex1" => suite_ex1(opts, csv_dir),
        "ex2" => suite_ex2(opts, csv_dir),
        "ex3" => suite_ex3(opts, csv_dir),
        "ex4" => suite_ex4(opts, csv_dir),
        "ex5" => suite_ex5(opts, csv_dir),
        "ex6" => suite_ex6(opts, csv_dir),
        other => anyhow::bail!("unknown suite {other:?}; expected one of {SUITE_NAMES:?}"),
    }
}

/// Index-policy optimization on the base cost vector and the variant whose
/// optimum is not monotone per group.
fn suite_ex1(opts: &SolveOptions, csv_dir: Option<&Path>) -> Result<(QueueModel, Value)> {
    let mut rows = Vec::new();
    for (label, costs) in [("base", [7.0, 4.0, 3.0]), ("variant", [7.0, 4.0, 1.8])] {
        let model = three_group_model(costs);
        let sol = optimize_index_policy(&model, opts)?;
        if let Some(dir) = csv_dir {
            let upto = sol.policy.frontier() + TABLE_MARGIN;
            write_policy_csv(&dir.join(format!("ex1_{label}_policy.csv")), &model, &sol.policy, upto)?;
            write_curves_csv(&dir.join(format!("ex1_{label}_curves.csv")), &sol.report, upto)?;
            write_trace_csv(&dir.join(format!("ex1_{label}_trace.csv")), &sol.trace)?;
        }
        rows.push(json!({
            "label": label,
            "c": costs,
            "eta": eta_entry(sol.report.eta, "index-iteration"),
            "trace": trace_rows(&sol.trace),
            "tables": solution_tables(&sol.policy, &sol.report, TABLE_MARGIN),
        }));
    }
    Ok((three_group_model([7.0, 4.0, 3.0]), json!({ "runs": rows })))
}

/// Threshold optimization under scale economies, cross-checked against the
/// index iteration.
fn suite_ex2(opts: &SolveOptions, csv_dir: Option<&Path>) -> Result<(QueueModel, Value)> {
    let model = cmu_model(10.0);
    let cmu = optimize_thresholds(&model, opts)?;
    let index = optimize_index_policy(&model, opts)?;
    let induced = threshold_to_policy(&model, &cmu.thresholds)?;
    if let Some(dir) = csv_dir {
        let upto = cmu.policy.frontier() + TABLE_MARGIN;
        write_policy_csv(&dir.join("ex2_policy.csv"), &model, &cmu.policy, upto)?;
        write_curves_csv(&dir.join("ex2_curves.csv"), &cmu.report, upto)?;
        write_trace_csv(&dir.join("ex2_trace.csv"), &cmu.trace)?;
    }
    let results = json!({
        "thresholds": cmu.thresholds.thresholds(),
        "eta": eta_entry(cmu.report.eta, "cmu-iteration"),
        "eta_index": eta_entry(index.report.eta, "index-iteration"),
        "policies_identical": index.policy == induced,
        "trace": trace_rows(&cmu.trace),
        "tables": solution_tables(&cmu.policy, &cmu.report, TABLE_MARGIN),
    });
    Ok((model, results))
}

/// Arrival-rate sweep up to near saturation.
fn suite_ex3(opts: &SolveOptions, csv_dir: Option<&Path>) -> Result<(QueueModel, Value)> {
    let lambdas = [2.0, 5.0, 10.0, 20.0, 30.0, 38.0, 39.0];
    let mut rows = Vec::new();
    let mut csv = Vec::new();
    for lambda in lambdas {
        let model = cmu_model(lambda);
        let sol = optimize_thresholds(&model, opts)?;
        let theta = sol.thresholds.thresholds().to_vec();
        csv.push(format!(
            "{lambda},{},{}",
            sol.report.eta,
            theta.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")
        ));
        rows.push(json!({
            "lambda": lambda,
            "thresholds": theta,
            "eta": eta_entry(sol.report.eta, "cmu-iteration"),
            "iterations": sol.trace.len(),
        }));
    }
    if let Some(dir) = csv_dir {
        write_table_csv(
            &dir.join("ex3_sweep.csv"),
            "lambda,eta,theta_1,theta_2,theta_3",
            &csv,
        )?;
    }
    Ok((cmu_model(10.0), json!({ "sweep": rows })))
}

/// Operating-cost weight sweep.
fn suite_ex4(opts: &SolveOptions, csv_dir: Option<&Path>) -> Result<(QueueModel, Value)> {
    let weights = [0.1, 0.3, 0.5, 1.0, 2.0, 3.0];
    let mut rows = Vec::new();
    let mut csv = Vec::new();
    for v in weights {
        let model = cmu_model(10.0).with_weight(v);
        let sol = optimize_thresholds(&model, opts)?;
        let theta = sol.thresholds.thresholds().to_vec();
        csv.push(format!(
            "{v},{},{}",
            sol.report.eta,
            theta.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")
        ));
        rows.push(json!({
            "v": v,
            "thresholds": theta,
            "eta": eta_entry(sol.report.eta, "cmu-iteration"),
            "iterations": sol.trace.len(),
        }));
    }
    if let Some(dir) = csv_dir {
        write_table_csv(
            &dir.join("ex4_sweep.csv"),
            "v,eta,theta_1,theta_2,theta_3",
            &csv,
        )?;
    }
    Ok((cmu_model(10.0), json!({ "sweep": rows })))
}

/// Group-count scalability sweep.
fn suite_ex5(opts: &SolveOptions, csv_dir: Option<&Path>) -> Result<(QueueModel, Value)> {
    let sizes = [3usize, 5, 10, 20, 30, 50];
    let mut rows = Vec::new();
    let mut csv = Vec::new();
    for k in sizes {
        let model = scalability_model(k);
        let sol = optimize_thresholds(&model, opts)?;
        csv.push(format!("{k},{},{}", sol.trace.len(), sol.report.eta));
        rows.push(json!({
            "k": k,
            "lambda": model.arrival_rate,
            "iterations": sol.trace.len(),
            "converged": sol.trace.converged,
            "eta": eta_entry(sol.report.eta, "cmu-iteration"),
            "theta_last": sol.thresholds.thresholds().last(),
        }));
    }
    if let Some(dir) = csv_dir {
        write_table_csv(&dir.join("ex5_sweep.csv"), "k,iterations,eta", &csv)?;
    }
    Ok((scalability_model(3), json!({ "sweep": rows })))
}

/// Robustness of the c/mu heuristic when scale economies fail: both
/// algorithms on six cost vectors, with the relative cost gap.
fn suite_ex6(opts: &SolveOptions, csv_dir: Option<&Path>) -> Result<(QueueModel, Value)> {
    let vectors = [
        [7.0, 4.0, 3.0],
        [7.0, 4.0, 1.8],
        [7.0, 4.0, 1.0],
        [8.0, 3.0, 1.0],
        [4.0, 3.0, 1.0],
        [18.0, 10.0, 3.0],
    ];
    let mut rows = Vec::new();
    let mut csv = Vec::new();
    for costs in vectors {
        let model = three_group_model(costs);
        let index = optimize_index_policy(&model, opts)?;
        let cmu = optimize_thresholds(&model, opts)?;
        let error_pct = (cmu.report.eta - index.report.eta) / index.report.eta * 100.0;
        csv.push(format!(
            "{},{},{},{},{},{:.2}",
            costs[0], costs[1], costs[2], index.report.eta, cmu.report.eta, error_pct
        ));
        rows.push(json!({
            "c": costs,
            "scale_economies": cmu.scale_economies,
            "eta_optimal": eta_entry(index.report.eta, "index-iteration"),
            "eta_cmu": eta_entry(cmu.report.eta, "cmu-iteration (heuristic)"),
            "thresholds_cmu": cmu.thresholds.thresholds(),
            "error": format!("{error_pct:.2}%"),
            "error_pct": error_pct,
        }));
    }
    if let Some(dir) = csv_dir {
        write_table_csv(
            &dir.join("ex6_table.csv"),
            "c1,c2,c3,eta_index,eta_cmu,error_pct",
            &csv,
        )?;
    }
    Ok((three_group_model([7.0, 4.0, 3.0]), json!({ "table": rows })))
}
