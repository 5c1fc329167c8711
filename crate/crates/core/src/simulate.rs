//! Discrete-event simulation of the group-server queue under a policy,
//! giving a statistically independent estimate of the long-run average cost.
//!
//! Because service is exponential and customers migrate freely between
//! servers, the only dynamic that matters at state `n` is the aggregate
//! service rate `d(n) mu`. The simulator therefore runs a single exponential
//! clock at rate `lambda + d(n) mu` and thins it into arrivals and
//! departures, which is statistically identical to per-server clocks and far
//! simpler. Confidence intervals come from batch means pooled across
//! replications.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::model::{Policy, QueueModel};

/// Name of the generator backing the simulation, for report provenance.
/// Replications use independent counter streams of the same seed.
pub const RNG_ALGORITHM: &str = "ChaCha12";

/// Simulation run parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Simulated time units per replication.
    pub horizon: f64,
    /// Initial time units discarded before measuring.
    pub warmup: f64,
    /// Independent replications (separate RNG streams).
    pub replications: u32,
    /// Master seed.
    pub seed: u64,
    /// Batches per replication for the batch-means interval.
    pub batch_count: u32,
}

impl SimConfig {
    /// Defaults: 10% warmup, one replication, 20 batches.
    pub fn new(horizon: f64, seed: u64) -> Self {
        Self {
            horizon,
            warmup: 0.1 * horizon,
            replications: 1,
            seed,
            batch_count: 20,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.horizon > self.warmup && self.warmup >= 0.0) {
            return Err(Error::Domain(format!(
                "horizon {} must exceed warmup {} (and warmup must be nonnegative)",
                self.horizon, self.warmup
            )));
        }
        if self.replications < 1 {
            return Err(Error::Domain("at least one replication required".into()));
        }
        if self.batch_count < 2 {
            return Err(Error::Domain("at least two batches required".into()));
        }
        Ok(())
    }
}

/// Point estimate and confidence interval from a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimEstimate {
    /// Time-average cost after warmup.
    pub eta_hat: f64,
    /// 95% half-width from pooled batch means.
    pub ci_halfwidth: f64,
    /// Time-average number of customers in the system.
    pub mean_queue_length: f64,
    /// Batch means pooled into the interval.
    pub batches: usize,
}

impl SimEstimate {
    pub fn covers(&self, eta: f64) -> bool {
        (self.eta_hat - eta).abs() <= self.ci_halfwidth
    }
}

/// Simulate `policy` on `model` and estimate the average cost.
///
/// The state jumps on every arrival/departure and the action switches
/// instantly to `policy(n)`; zero setup cost and memoryless service make the
/// switch free. Fails if the queue exceeds 100x the policy frontier, which a
/// stable configuration will not reach.
pub fn simulate(model: &QueueModel, policy: &Policy, config: &SimConfig) -> Result<SimEstimate> {
    config.check()?;
    if model.capacity() <= model.arrival_rate {
        return Err(Error::Instability(format!(
            "arrival rate {} is not below the all-on capacity {}",
            model.arrival_rate,
            model.capacity()
        )));
    }

    let batch_count = config.batch_count as usize;
    let measured = config.horizon - config.warmup;
    let batch_len = measured / batch_count as f64;
    let guard = 100 * policy.frontier().max(1);

    let mut batch_means = Vec::with_capacity(batch_count * config.replications as usize);
    let mut queue_area_total = 0.0;

    for rep in 0..config.replications {
        let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
        rng.set_stream(rep as u64 + 1);

        let mut cost_batches = vec![0.0f64; batch_count];
        let mut queue_area = 0.0f64;
        let mut t = 0.0f64;
        let mut n = 0usize;

        while t < config.horizon {
            let served = policy.service_rate(model, n);
            let total_rate = model.arrival_rate + served;
            let dt = Exp::new(total_rate)
                .map_err(|e| Error::Solver(format!("bad event rate {total_rate}: {e}")))?
                .sample(&mut rng);
            let t_next = t + dt;

            // Integrate the cost over the post-warmup part of [t, t_next),
            // split across batch boundaries.
            let seg_start = t.max(config.warmup);
            let seg_end = t_next.min(config.horizon);
            if seg_end > seg_start {
                let cost_rate = policy.cost_rate(model, n);
                let mut s = seg_start;
                while s < seg_end {
                    let b = (((s - config.warmup) / batch_len) as usize).min(batch_count - 1);
                    let boundary = config.warmup + (b + 1) as f64 * batch_len;
                    let e = seg_end.min(boundary);
                    if e <= s {
                        break;
                    }
                    cost_batches[b] += cost_rate * (e - s);
                    queue_area += n as f64 * (e - s);
                    s = e;
                }
            }

            if t_next >= config.horizon {
                break;
            }
            t = t_next;

            if rng.gen::<f64>() < model.arrival_rate / total_rate {
                n += 1;
                if n > guard {
                    return Err(Error::Instability(format!(
                        "simulated queue exceeded the guard length {guard}"
                    )));
                }
            } else {
                n -= 1;
            }
        }

        for b in cost_batches {
            batch_means.push(b / batch_len);
        }
        queue_area_total += queue_area;
    }

    let count = batch_means.len();
    let eta_hat = batch_means.iter().sum::<f64>() / count as f64;
    let variance = batch_means
        .iter()
        .map(|m| (m - eta_hat).powi(2))
        .sum::<f64>()
        / (count - 1) as f64;
    let ci_halfwidth = if variance > 0.0 {
        let t_quantile = StudentsT::new(0.0, 1.0, (count - 1) as f64)
            .map_err(|e| Error::Solver(format!("t distribution: {e}")))?
            .inverse_cdf(0.975);
        t_quantile * (variance / count as f64).sqrt()
    } else {
        0.0
    };

    Ok(SimEstimate {
        eta_hat,
        ci_halfwidth,
        mean_queue_length: queue_area_total / (measured * config.replications as f64),
        batches: count,
    })
}
