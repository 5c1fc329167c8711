//! Report assembly and emission: a stable JSON document plus CSV tables for
//! the policy matrix, potential/PRF curves, and the iteration trace.
//!
//! Reports are deterministic for a fixed config and seed; only the timestamp
//! field varies between runs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use gsq_core::{OptimizationTrace, Policy, QueueModel, SolveReport};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

/// Extra states past the frontier included in emitted tables.
pub const TABLE_MARGIN: usize = 10;

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: ToolInfo,
    pub timestamp: String,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub config: Value,
    pub model: ModelEcho,
    pub scale_economies: bool,
    /// Original group indices in ascending c/mu order.
    pub cmu_order: Vec<usize>,
    pub results: Value,
}

#[derive(Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Serialize)]
pub struct ModelEcho {
    pub lambda: f64,
    pub v: f64,
    pub groups: Vec<GroupEcho>,
}

#[derive(Debug, Serialize)]
pub struct GroupEcho {
    pub servers: u32,
    pub mu: f64,
    pub c: f64,
    pub cost_per_rate: f64,
}

impl Report {
    pub fn new(mode: &str, model: &QueueModel, config_echo: Value, seed: Option<u64>) -> Self {
        let (scale_economies, cmu_order) = gsq_core::check_scale_economies(model);
        Report {
            tool: ToolInfo {
                name: "gsq",
                version: env!("CARGO_PKG_VERSION"),
            },
            timestamp: chrono::Utc::now().to_rfc3339(),
            mode: mode.to_string(),
            seed,
            config: config_echo,
            model: ModelEcho {
                lambda: model.arrival_rate,
                v: model.operating_weight,
                groups: model
                    .groups
                    .iter()
                    .map(|g| GroupEcho {
                        servers: g.servers,
                        mu: g.service_rate,
                        c: g.cost_rate,
                        cost_per_rate: g.cost_per_rate(),
                    })
                    .collect(),
            },
            scale_economies,
            cmu_order,
            results: Value::Null,
        }
    }

    pub fn write_json(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join("report.json");
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// JSON block shared by every eta-producing mode: the value and the method
/// that produced it.
pub fn eta_entry(value: f64, method: &str) -> Value {
    json!({ "value": value, "method": method })
}

/// Solution tables for one converged policy, trimmed to `frontier + margin`.
pub fn solution_tables(policy: &Policy, report: &SolveReport, margin: usize) -> Value {
    let upto = (policy.frontier() + margin).min(report.truncation);
    let policy_rows: Vec<Vec<u32>> = (0..=upto).map(|n| policy.action(n).counts.clone()).collect();
    json!({
        "frontier": policy.frontier(),
        "truncation": report.truncation,
        "tail_mass": report.tail_mass,
        "mean_queue_length": report.mean_queue_length(),
        "states": upto,
        "policy": policy_rows,
        "g": &report.g[..=upto],
        "G": &report.prf[..=upto],
    })
}

pub fn trace_rows(trace: &OptimizationTrace) -> Value {
    json!({
        "converged": trace.converged,
        "iterations": trace.len(),
        "eta_per_iteration": trace
            .iterations
            .iter()
            .map(|r| json!({ "eta": r.eta, "frontier": r.frontier }))
            .collect::<Vec<_>>(),
    })
}

/// `n,group_1,...,group_K` rows for states `0..=upto`.
pub fn write_policy_csv(
    path: &Path,
    model: &QueueModel,
    policy: &Policy,
    upto: usize,
) -> Result<()> {
    let mut text = String::from("n");
    for k in 1..=model.group_count() {
        text.push_str(&format!(",group_{k}"));
    }
    text.push('\n');
    for n in 0..=upto {
        text.push_str(&n.to_string());
        for &c in &policy.action(n).counts {
            text.push_str(&format!(",{c}"));
        }
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// `n,g,G` rows for states `0..=upto`; G is empty at n = 0.
pub fn write_curves_csv(path: &Path, report: &SolveReport, upto: usize) -> Result<()> {
    let mut text = String::from("n,g,G\n");
    for n in 0..=upto.min(report.truncation) {
        if n == 0 {
            text.push_str(&format!("0,{},\n", report.g[0]));
        } else {
            text.push_str(&format!("{n},{},{}\n", report.g[n], report.prf[n]));
        }
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// `iteration,eta,frontier` rows.
pub fn write_trace_csv(path: &Path, trace: &OptimizationTrace) -> Result<()> {
    let mut text = String::from("iteration,eta,frontier\n");
    for (i, r) in trace.iterations.iter().enumerate() {
        text.push_str(&format!("{},{},{}\n", i + 1, r.eta, r.frontier));
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Generic small summary table.
pub fn write_table_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut text = String::from(header);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
