//! Cross-replication aggregation.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::run::{run_one, RunOutput};
use crate::master::LearnerCounters;

/// Empirical quantile with linear interpolation between order statistics
/// (`h = (n - 1) p`). `sorted` must be ascending and non-empty.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean and (10%, 90%) band of one policy's cumulative reward at one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub mean: f64,
    pub q10: f64,
    pub q90: f64,
}

impl Band {
    pub fn from_values(values: &mut [f64]) -> Self {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        values.sort_by(f64::total_cmp);
        Band {
            mean,
            q10: quantile(values, 0.1),
            q90: quantile(values, 0.9),
        }
    }
}

/// One round of the aggregate file; `bands` follows the policy label order.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub t: u64,
    pub bands: Vec<Band>,
}

/// What a replication keeps from each run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub run_id: u64,
    /// Cumulative reward per policy (master first), indexed by `t - 1`.
    pub cumulative: Vec<Vec<f64>>,
    pub final_counters: Vec<LearnerCounters>,
    /// Longest prefix at which the selector can be evaluated after the run.
    pub max_common_prefix: u64,
    /// Selector output on `selection_grid`.
    pub selections: Vec<Option<usize>>,
}

#[derive(Debug, Clone)]
pub struct ReplicateOutput {
    pub labels: Vec<String>,
    pub rows: Vec<AggregateRow>,
    pub runs: Vec<RunSummary>,
    pub selection_grid: Vec<u64>,
    /// Full run outputs, kept only for full traces.
    pub outputs: Option<Vec<RunOutput>>,
}

impl ReplicateOutput {
    pub fn final_row(&self) -> &AggregateRow {
        self.rows.last().expect("horizon >= 1")
    }

    /// Mean cumulative reward of `label` at every round.
    pub fn mean_curve(&self, label: &str) -> Option<Vec<f64>> {
        let i = self.labels.iter().position(|l| l == label)?;
        Some(self.rows.iter().map(|r| r.bands[i].mean).collect())
    }
}

pub(crate) fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Selector grid `1, 2, 4, ...` up to `horizon`.
fn selection_grid(horizon: u64) -> Vec<u64> {
    std::iter::successors(Some(1u64), |n| n.checked_mul(2))
        .take_while(|&n| n <= horizon)
        .collect()
}

/// Runs `cfg.runs` replications in parallel and aggregates per round.
/// The reduction runs in `run_id` order, so results do not depend on scheduling.
pub fn replicate(cfg: &ExperimentConfig) -> Result<ReplicateOutput> {
    cfg.validate()?;
    let grid = selection_grid(cfg.horizon);
    let keep_outputs = matches!(cfg.trace, crate::harness::TraceGranularity::Full);
    let results: Vec<(RunSummary, Option<RunOutput>)> = with_pool(cfg.threads, || {
        (0..cfg.runs)
            .into_par_iter()
            .map(|run_id| {
                let out = run_one(cfg, run_id)?;
                let mut cumulative = vec![out.master.run.cumulative_rewards()];
                cumulative.extend(out.standalone.iter().map(|s| s.cumulative_rewards()));
                let summary = RunSummary {
                    run_id,
                    cumulative,
                    final_counters: out.master.final_state.counters().to_vec(),
                    max_common_prefix: out.master.final_state.max_common_prefix(),
                    selections: out.master.selector_on(&grid),
                };
                Ok((summary, keep_outputs.then_some(out)))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let (runs, outputs): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let labels = cfg.policy_labels();
    let horizon = cfg.horizon as usize;
    let mut rows = Vec::with_capacity(horizon);
    let mut column = vec![0.0; runs.len()];
    for i in 0..horizon {
        let bands = (0..labels.len())
            .map(|p| {
                for (slot, run) in column.iter_mut().zip(&runs) {
                    *slot = run.cumulative[p][i];
                }
                Band::from_values(&mut column)
            })
            .collect();
        rows.push(AggregateRow { t: i as u64 + 1, bands });
    }
    Ok(ReplicateOutput {
        labels,
        rows,
        runs,
        selection_grid: grid,
        outputs: keep_outputs.then(|| outputs.into_iter().flatten().collect()),
    })
}
