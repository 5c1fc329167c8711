//! Strict TOML configuration for models and run options. Unknown keys are
//! rejected so replication typos surface as errors instead of defaults.

use std::path::Path;

use anyhow::{Context, Result};
use gsq_core::{GroupSpec, HoldingCost, QueueModel, SimConfig};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Arrival rate.
    pub lambda: f64,
    /// Operating-cost weight; 1 if omitted.
    #[serde(default = "default_weight")]
    pub v: f64,
    pub groups: Vec<GroupConfig>,
    pub holding: HoldingConfig,
    #[serde(default)]
    pub solve: SolveSection,
    #[serde(default)]
    pub evaluate: Option<EvaluateSection>,
    #[serde(default)]
    pub simulate: Option<SimulateSection>,
    #[serde(default)]
    pub brute_force: Option<BruteForceSection>,
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    pub servers: u32,
    pub mu: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum HoldingConfig {
    /// h(n) = slope * n
    Linear { slope: f64 },
    /// h(n) = a * n^p + b
    Power {
        a: f64,
        p: f64,
        #[serde(default)]
        b: f64,
    },
    /// Explicit values for n = 0.., extended past the end with `slope`.
    Table { values: Vec<f64>, slope: f64 },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    /// "auto" (default), "index", or "cmu".
    pub algorithm: Option<String>,
    pub max_iters: Option<usize>,
    /// Fixed truncation level instead of adaptive growth.
    pub truncation: Option<usize>,
    /// Average-cost settling tolerance for the adaptive truncation.
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateSection {
    /// Thresholds in ascending-c/mu group order.
    pub thresholds: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub horizon: f64,
    /// Defaults to 10% of the horizon.
    pub warmup: Option<f64>,
    #[serde(default = "default_replications")]
    pub replications: u32,
    #[serde(default = "default_batches")]
    pub batch_count: u32,
    pub seed: Option<u64>,
    /// Policy to simulate; falls back to [evaluate].thresholds or a fresh solve.
    pub thresholds: Option<Vec<usize>>,
}

fn default_replications() -> u32 {
    1
}

fn default_batches() -> u32 {
    20
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BruteForceSection {
    pub bound: usize,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<(Self, toml::Value)> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let echo: toml::Value = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let config: FileConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok((config, echo))
    }

    pub fn model(&self) -> QueueModel {
        let groups = self
            .groups
            .iter()
            .map(|g| GroupSpec::new(g.servers, g.mu, g.c))
            .collect();
        let holding = match &self.holding {
            HoldingConfig::Linear { slope } => HoldingCost::linear(*slope),
            HoldingConfig::Power { a, p, b } => HoldingCost::power(*a, *p, *b),
            HoldingConfig::Table { values, slope } => HoldingCost::table(values.clone(), *slope),
        };
        QueueModel::new(self.lambda, groups, holding).with_weight(self.v)
    }

    pub fn sim_config(&self, seed_override: Option<u64>) -> Option<SimConfig> {
        let section = self.simulate.as_ref()?;
        let mut config = SimConfig::new(section.horizon, 0);
        if let Some(w) = section.warmup {
            config.warmup = w;
        }
        config.replications = section.replications;
        config.batch_count = section.batch_count;
        config.seed = seed_override.or(section.seed).unwrap_or(0);
        Some(config)
    }
}
