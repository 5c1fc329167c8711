//! `gsq` — solve, evaluate, simulate, and sweep group-server queue
//! scheduling problems from TOML model configs.
//!
//! Exit codes: 0 success, 2 validation failure, 3 non-convergence,
//! 4 instability, 1 anything else (I/O, config parse, bad arguments).

mod config;
mod report;
mod suites;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use gsq_core::*;
use serde_json::{json, Value};

use config::FileConfig;
use report::{eta_entry, solution_tables, trace_rows, Format, Report, TABLE_MARGIN};

#[derive(Parser)]
#[command(
    name = "gsq",
    version,
    about = "Dynamic on/off scheduling of heterogeneous server groups in a single queue"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Directory for report.json and CSV tables (stdout JSON if omitted)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Which artifacts to write under --out
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    format: Format,

    /// Simulation seed override (recorded in the report)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Cap on policy-improvement iterations
    #[arg(long, global = true)]
    max_iters: Option<usize>,

    /// Average-cost settling tolerance of the adaptive truncation
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Fixed truncation level (disables adaptive growth)
    #[arg(long, global = true)]
    truncation: Option<usize>,

    /// Run the c/mu threshold iteration as a heuristic even when the
    /// scale-economies condition fails
    #[arg(long, global = true)]
    heuristic_cmu: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Find an optimal policy (index iteration, c/mu thresholds, or auto)
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Algorithm::Auto)]
        algorithm: Algorithm,
    },
    /// Evaluate a given threshold policy exactly
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        /// Thresholds in ascending-c/mu group order, e.g. 1,9,21
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<usize>>,
    },
    /// Estimate the average cost by discrete-event simulation
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<usize>>,
    },
    /// Exhaustively search threshold policies up to a bound
    BruteForce {
        #[arg(long)]
        config: PathBuf,
        /// Largest allowed threshold (default 25, or [brute_force].bound)
        #[arg(long)]
        bound: Option<usize>,
    },
    /// Run a built-in experiment suite (ex1..ex6)
    Suite {
        #[arg(long)]
        name: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algorithm {
    Auto,
    Index,
    Cmu,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::InvalidModel(_)) | Some(Error::Domain(_)) => 2,
        Some(Error::NonConvergence { .. }) | Some(Error::PolicyCycle { .. }) => 3,
        Some(Error::Instability(_)) => 4,
        _ => 1,
    }
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
    }
    match &cli.command {
        Command::Solve { config, algorithm } => cmd_solve(cli, config, *algorithm),
        Command::Evaluate { config, thresholds } => cmd_evaluate(cli, config, thresholds.clone()),
        Command::Simulate { config, thresholds } => cmd_simulate(cli, config, thresholds.clone()),
        Command::BruteForce { config, bound } => cmd_brute_force(cli, config, *bound),
        Command::Suite { name } => cmd_suite(cli, name),
    }
}

/// Load a config, build the model, and fail with the named violations if it
/// does not validate.
fn load_model(path: &Path) -> Result<(FileConfig, Value, QueueModel)> {
    let (file, echo) = FileConfig::load(path)?;
    let model = file.model();
    let validation = model.validate();
    if !validation.passed() {
        let details = validation
            .violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::InvalidModel(details).into());
    }
    let echo_json = serde_json::to_value(&echo)?;
    Ok((file, echo_json, model))
}

fn solve_options(cli: &Cli, file: &FileConfig) -> SolveOptions {
    let mut opts = SolveOptions::default();
    if let Some(n) = cli.max_iters.or(file.solve.max_iters) {
        opts.max_iterations = n;
    }
    if let Some(t) = cli.truncation.or(file.solve.truncation) {
        opts.truncation.n_max_override = Some(t);
    }
    if let Some(tol) = cli.tol.or(file.solve.tol) {
        opts.truncation.eta_tol = tol;
    }
    opts
}

fn emit(cli: &Cli, report: &Report, summary: &str) -> Result<()> {
    match &cli.out {
        Some(dir) => {
            if cli.format.json() {
                let path = report.write_json(dir)?;
                println!("{summary}");
                println!("report: {}", path.display());
            } else {
                println!("{summary}");
            }
        }
        None => {
            println!("{}", serde_json::to_string_pretty(report)?);
        }
    }
    Ok(())
}

fn csv_dir(cli: &Cli) -> Option<&Path> {
    match &cli.out {
        Some(dir) if cli.format.csv() => Some(dir.as_path()),
        _ => None,
    }
}

fn cmd_solve(cli: &Cli, config_path: &Path, algorithm: Algorithm) -> Result<()> {
    let (file, echo, model) = load_model(config_path)?;
    let opts = solve_options(cli, &file);
    let (scale, _) = check_scale_economies(&model);

    let algorithm = match file.solve.algorithm.as_deref() {
        _ if algorithm != Algorithm::Auto => algorithm,
        Some("index") => Algorithm::Index,
        Some("cmu") => Algorithm::Cmu,
        Some("auto") | None => Algorithm::Auto,
        Some(other) => bail!("unknown algorithm {other:?} in config (use auto|index|cmu)"),
    };
    let effective = match algorithm {
        Algorithm::Auto => {
            if scale {
                Algorithm::Cmu
            } else {
                Algorithm::Index
            }
        }
        a => a,
    };

    let mut report = Report::new("solve", &model, echo, None);
    let summary;
    match effective {
        Algorithm::Cmu => {
            if !scale && !cli.heuristic_cmu {
                return Err(Error::Domain(
                    "scale economies do not hold; pass --heuristic-cmu to run the c/mu \
                     iteration as a heuristic"
                        .into(),
                )
                .into());
            }
            let sol = optimize_thresholds(&model, &opts)?;
            let thresholds_by_group = thresholds_by_group(&model, &sol);
            if let Some(dir) = csv_dir(cli) {
                let upto = sol.policy.frontier() + TABLE_MARGIN;
                report::write_policy_csv(&dir.join("policy.csv"), &model, &sol.policy, upto)?;
                report::write_curves_csv(&dir.join("curves.csv"), &sol.report, upto)?;
                report::write_trace_csv(&dir.join("trace.csv"), &sol.trace)?;
            }
            summary = format!(
                "cmu-iteration{}: eta* = {:.6}, theta* = {:?} ({} iterations)",
                if sol.scale_economies { "" } else { " [heuristic]" },
                sol.report.eta,
                sol.thresholds.thresholds(),
                sol.trace.len()
            );
            report.results = json!({
                "algorithm": "cmu-iteration",
                "heuristic": !sol.scale_economies,
                "eta": eta_entry(sol.report.eta, "cmu-iteration"),
                "thresholds": sol.thresholds.thresholds(),
                "thresholds_by_group": thresholds_by_group,
                "trace": trace_rows(&sol.trace),
                "tables": solution_tables(&sol.policy, &sol.report, TABLE_MARGIN),
            });
        }
        _ => {
            let sol = optimize_index_policy(&model, &opts)?;
            if let Some(dir) = csv_dir(cli) {
                let upto = sol.policy.frontier() + TABLE_MARGIN;
                report::write_policy_csv(&dir.join("policy.csv"), &model, &sol.policy, upto)?;
                report::write_curves_csv(&dir.join("curves.csv"), &sol.report, upto)?;
                report::write_trace_csv(&dir.join("trace.csv"), &sol.trace)?;
            }
            summary = format!(
                "index-iteration: eta* = {:.6} (frontier {}, {} iterations)",
                sol.report.eta,
                sol.policy.frontier(),
                sol.trace.len()
            );
            report.results = json!({
                "algorithm": "index-iteration",
                "eta": eta_entry(sol.report.eta, "index-iteration"),
                "trace": trace_rows(&sol.trace),
                "tables": solution_tables(&sol.policy, &sol.report, TABLE_MARGIN),
            });
        }
    }
    emit(cli, &report, &summary)
}

/// Map sorted-space thresholds back to the model's group order.
fn thresholds_by_group(model: &QueueModel, sol: &ThresholdSolution) -> Vec<usize> {
    let mut by_group = vec![0usize; model.group_count()];
    for (j, &k) in sol.group_order.iter().enumerate() {
        by_group[k] = sol.thresholds.thresholds()[j];
    }
    by_group
}

fn resolve_thresholds(
    flag: Option<Vec<usize>>,
    file: &FileConfig,
    simulate_section: bool,
) -> Option<Vec<usize>> {
    if flag.is_some() {
        return flag;
    }
    if simulate_section {
        if let Some(sim) = &file.simulate {
            if sim.thresholds.is_some() {
                return sim.thresholds.clone();
            }
        }
    }
    file.evaluate.as_ref().map(|e| e.thresholds.clone())
}

fn cmd_evaluate(cli: &Cli, config_path: &Path, flag: Option<Vec<usize>>) -> Result<()> {
    let (file, echo, model) = load_model(config_path)?;
    let theta = resolve_thresholds(flag, &file, false).ok_or_else(|| {
        Error::Domain("evaluate needs thresholds (--thresholds or [evaluate] section)".into())
    })?;
    let theta = ThresholdPolicy::new(theta)?;
    let policy = threshold_to_policy(&model, &theta)?;
    let opts = solve_options(cli, &file);
    let solve = evaluate_policy(&model, &policy, &opts.truncation)?;

    if let Some(dir) = csv_dir(cli) {
        let upto = policy.frontier() + TABLE_MARGIN;
        report::write_policy_csv(&dir.join("policy.csv"), &model, &policy, upto)?;
        report::write_curves_csv(&dir.join("curves.csv"), &solve, upto)?;
    }

    let mut report = Report::new("evaluate", &model, echo, None);
    let summary = format!(
        "evaluate: theta = {:?}, eta = {:.6}",
        theta.thresholds(),
        solve.eta
    );
    report.results = json!({
        "thresholds": theta.thresholds(),
        "eta": eta_entry(solve.eta, "exact-evaluation"),
        "tables": solution_tables(&policy, &solve, TABLE_MARGIN),
    });
    emit(cli, &report, &summary)
}

fn cmd_simulate(cli: &Cli, config_path: &Path, flag: Option<Vec<usize>>) -> Result<()> {
    let (file, echo, model) = load_model(config_path)?;
    let sim_config = file.sim_config(cli.seed).ok_or_else(|| {
        Error::Domain("simulate needs a [simulate] section with at least a horizon".into())
    })?;

    // Policy: explicit thresholds, or solve for the optimum first.
    let (theta, policy, solved_eta) = match resolve_thresholds(flag, &file, true) {
        Some(t) => {
            let theta = ThresholdPolicy::new(t)?;
            let policy = threshold_to_policy(&model, &theta)?;
            (theta, policy, None)
        }
        None => {
            let opts = solve_options(cli, &file);
            let (scale, _) = check_scale_economies(&model);
            if scale || cli.heuristic_cmu {
                let sol = optimize_thresholds(&model, &opts)?;
                (sol.thresholds.clone(), sol.policy, Some(sol.report.eta))
            } else {
                // No threshold representation for a general index policy;
                // simulate the policy table directly.
                let sol = optimize_index_policy(&model, &opts)?;
                let est = simulate(&model, &sol.policy, &sim_config)?;
                let mut report = Report::new("simulate", &model, echo, Some(sim_config.seed));
                let summary = format!(
                    "simulate (index optimum): eta_hat = {:.6} +- {:.6}",
                    est.eta_hat, est.ci_halfwidth
                );
                report.results = sim_results(
                    &est,
                    &sim_config,
                    None,
                    Some((sol.report.eta, "index-iteration")),
                );
                return emit(cli, &report, &summary);
            }
        }
    };

    let est = simulate(&model, &policy, &sim_config)?;
    let mut report = Report::new("simulate", &model, echo, Some(sim_config.seed));
    let summary = format!(
        "simulate: theta = {:?}, eta_hat = {:.6} +- {:.6}",
        theta.thresholds(),
        est.eta_hat,
        est.ci_halfwidth
    );
    report.results = sim_results(
        &est,
        &sim_config,
        Some(theta.thresholds()),
        solved_eta.map(|e| (e, "cmu-iteration")),
    );
    emit(cli, &report, &summary)
}

fn sim_results(
    est: &SimEstimate,
    config: &SimConfig,
    thresholds: Option<&[usize]>,
    analytic_eta: Option<(f64, &str)>,
) -> Value {
    json!({
        "eta_hat": eta_entry(est.eta_hat, "simulation"),
        "ci_halfwidth": est.ci_halfwidth,
        "mean_queue_length": est.mean_queue_length,
        "batches": est.batches,
        "rng": RNG_ALGORITHM,
        "horizon": config.horizon,
        "warmup": config.warmup,
        "replications": config.replications,
        "batch_count": config.batch_count,
        "thresholds": thresholds,
        "analytic_eta": analytic_eta.map(|(e, method)| eta_entry(e, method)),
    })
}

fn cmd_brute_force(cli: &Cli, config_path: &Path, bound_flag: Option<usize>) -> Result<()> {
    let (file, echo, model) = load_model(config_path)?;
    let bound = bound_flag
        .or(file.brute_force.as_ref().map(|b| b.bound))
        .unwrap_or(25);
    let (theta, eta) = brute_force_thresholds(&model, bound)?;
    let policy = threshold_to_policy(&model, &theta)?;
    let opts = solve_options(cli, &file);
    let solve = evaluate_policy(&model, &policy, &opts.truncation)?;

    let mut report = Report::new("brute-force", &model, echo, None);
    let summary = format!(
        "brute-force (bound {bound}): theta* = {:?}, eta* = {:.6}",
        theta.thresholds(),
        eta
    );
    report.results = json!({
        "bound": bound,
        "thresholds": theta.thresholds(),
        "eta": eta_entry(eta, "brute-force"),
        "tables": solution_tables(&policy, &solve, TABLE_MARGIN),
    });
    emit(cli, &report, &summary)
}

fn cmd_suite(cli: &Cli, name: &str) -> Result<()> {
    let mut opts = SolveOptions::default();
    if let Some(n) = cli.max_iters {
        opts.max_iterations = n;
    }
    if let Some(t) = cli.truncation {
        opts.truncation.n_max_override = Some(t);
    }
    if let Some(tol) = cli.tol {
        opts.truncation.eta_tol = tol;
    }

    let (model, results) = suites::run_suite(name, &opts, csv_dir(cli))?;
    let mut report = Report::new("experiment-suite", &model, json!({ "suite": name }), None);
    report.results = json!({ "suite": name, "results": results });
    let summary = format!("suite {name}: done");
    emit(cli, &report, &summary)
}
