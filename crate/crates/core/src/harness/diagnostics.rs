//! Learner deviation and selector diagnostics.

use rayon::prelude::*;

use crate::env::{
    best_fixed_arm_value, best_quadrant_policy_value, quadrant, EnvSpec, Environment, OracleValue, ORACLE_SAMPLES,
    ORACLE_SEED,
};
use crate::error::{Error, Result};
use crate::harness::aggregate::{with_pool, ReplicateOutput};
use crate::learner::{LearnerKind, LearnerSpec};
use crate::policy::{conditional_value, FixedArmPolicy, QuadrantPolicy, ValueEstimate};
use crate::rng::{stream, RunStreams, StreamTag};
use crate::types::{Context, Observation};

/// Which policy `R*_j` is attained by.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Comparator {
    /// Greedy on the true conditional means.
    Oracle,
    Quadrant(QuadrantPolicy),
    Fixed(FixedArmPolicy),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    /// The learner is well-specified: `R*_j = -V_0(env)`.
    Optimal,
    /// Best policy inside the learner's class.
    BestInClass,
    /// No in-class oracle available; falls back to `-V_0(env)`.
    OptimalFallback,
}

/// What `R*_j` was taken from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationReference {
    pub kind: ReferenceKind,
    pub value: OracleValue,
    pub comparator: Comparator,
}

impl DeviationReference {
    pub fn for_learner(kind: LearnerKind, env: &EnvSpec) -> Result<Self> {
        let env = env.build()?;
        let optimal = |kind| DeviationReference {
            kind,
            value: env.optimal_value(),
            comparator: Comparator::Oracle,
        };
        if kind.is_realizable(env.family()) {
            return Ok(optimal(ReferenceKind::Optimal));
        }
        Ok(match kind {
            LearnerKind::EpsGreedy => {
                let best = best_quadrant_policy_value(env.as_ref(), ORACLE_SAMPLES, ORACLE_SEED);
                DeviationReference {
                    kind: ReferenceKind::BestInClass,
                    value: best.value,
                    comparator: Comparator::Quadrant(best.policy),
                }
            }
            LearnerKind::Ucb1 => {
                let best = best_fixed_arm_value(env.as_ref(), ORACLE_SAMPLES, ORACLE_SEED);
                DeviationReference {
                    kind: ReferenceKind::BestInClass,
                    value: best.value,
                    comparator: Comparator::Fixed(best.policy),
                }
            }
            LearnerKind::LinUcb => optimal(ReferenceKind::OptimalFallback),
        })
    }

    pub fn value(&self) -> f64 {
        self.value.value
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            ReferenceKind::Optimal => "optimal",
            ReferenceKind::BestInClass => "best_in_class",
            ReferenceKind::OptimalFallback => "optimal_fallback",
        }
    }

    /// Conditional value of the reference policy at `x`.
    pub fn value_at(&self, env: &dyn Environment, x: &Context) -> f64 {
        match &self.comparator {
            Comparator::Oracle => env
                .num_actions()
                .iter()
                .map(|a| env.true_mean(a, x))
                .fold(f64::NEG_INFINITY, f64::max),
            Comparator::Quadrant(p) => env.true_mean(p.arms[quadrant(x)], x),
            Comparator::Fixed(p) => env.true_mean(p.arm, x),
        }
    }
}

/// Statistics of `Rbar(j, n) - R*_j` across runs at one `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationRow {
    pub n: u64,
    pub mean_excess: f64,
    pub std_error: f64,
    /// Frequency of `Rbar(j,n) - R*_j > c0 n^(-beta) + x`, per threshold pair.
    pub exceed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationTable {
    pub learner: LearnerKind,
    pub reference: DeviationReference,
    pub runs: u64,
    pub thresholds: Vec<(f64, f64)>,
    pub rows: Vec<DeviationRow>,
}

/// Runs `learner` standalone for `grid.max()` rounds, `runs` times, and tracks
/// `Rbar(j, n) - R*_j`, the running mean of each policy's excess risk. The
/// excess of `pi(j, tau)` is averaged pointwise over `eval_samples` fresh
/// contexts as the reference's conditional value minus the policy's, so no
/// estimate of `R*_j` itself enters.
/// The learner sees the same streams as in [`crate::harness::run_one`].
#[allow(clippy::too_many_arguments)]
pub fn deviation_diagnostic(
    env: &EnvSpec,
    learner: LearnerSpec,
    grid: &[u64],
    runs: u64,
    seed: u64,
    thresholds: &[(f64, f64)],
    eval_samples: usize,
    threads: Option<usize>,
) -> Result<DeviationTable> {
    let horizon = *grid
        .iter()
        .max()
        .ok_or_else(|| Error::domain("empty diagnostic grid"))?;
    if runs < 1 || eval_samples < 1 {
        return Err(Error::domain("need at least one run and one evaluation sample"));
    }
    let reference = DeviationReference::for_learner(learner.kind(), env)?;
    let beta = learner.kind().rate_exponent();
    let built_env = env.build()?;
    let per_run: Vec<Vec<f64>> = with_pool(threads, || {
        (0..runs)
            .into_par_iter()
            .map(|run_id| {
                let env = built_env.as_ref();
                let mut l = learner.build(env.num_actions(), env.dim())?;
                let mut streams = RunStreams::new(seed, run_id);
                let mut eval = stream(seed, run_id, StreamTag::Evaluation);
                let mut excess_sum = 0.0;
                let mut at_grid = Vec::with_capacity(grid.len());
                let mut probs = vec![0.0; env.num_actions().get()];
                for tau in 1..=horizon {
                    let mut gap = 0.0;
                    for _ in 0..eval_samples {
                        let x = env.sample_context(&mut eval);
                        gap += reference.value_at(env, &x) - conditional_value(l.propose(), env, &x, &mut probs);
                    }
                    excess_sum += gap / eval_samples as f64;
                    if grid.contains(&tau) {
                        at_grid.push(excess_sum / tau as f64);
                    }
                    let x = env.sample_context(&mut streams.env);
                    let a = l.propose().sample(&x, &mut streams.action);
                    let y = env.sample_reward(a, &x, &mut streams.env);
                    l.update(&Observation::new(x, a, y)?)?;
                }
                Ok(at_grid)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let mut sorted_grid = grid.to_vec();
    sorted_grid.sort_unstable();
    sorted_grid.dedup();
    let rows = sorted_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let values: Vec<f64> = per_run.iter().map(|r| r[i]).collect();
            let est = ValueEstimate::from_samples(values.iter().copied());
            let exceed = thresholds
                .iter()
                .map(|&(c0, x)| {
                    let bound = c0 * (n as f64).powf(-beta) + x;
                    values.iter().filter(|&&v| v > bound).count() as f64 / runs as f64
                })
                .collect();
            DeviationRow {
                n,
                mean_excess: est.mean,
                std_error: est.std_error,
                exceed,
            }
        })
        .collect();
    Ok(DeviationTable {
        learner: learner.kind(),
        reference,
        runs,
        thresholds: thresholds.to_vec(),
        rows,
    })
}

/// Frequency of each selector outcome at one common internal time.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRow {
    pub n: u64,
    /// Runs in which every learner reached `n` rewards.
    pub runs: u64,
    pub suboptimal: f64,
    /// Frequency of `j^(n) = j`, per learner.
    pub per_learner: Vec<f64>,
}

/// Indices of learners whose class holds the optimal policy. With a single
/// learner that learner is optimal by definition.
pub fn optimal_set(env: &EnvSpec, learners: &[LearnerSpec]) -> Result<Vec<usize>> {
    if learners.len() == 1 {
        return Ok(vec![0]);
    }
    let family = env.build()?.family();
    let set: Vec<usize> = learners
        .iter()
        .enumerate()
        .filter(|(_, s)| s.kind().is_realizable(family))
        .map(|(j, _)| j)
        .collect();
    if set.is_empty() {
        return Err(Error::config("no learner is well-specified for this environment"));
    }
    Ok(set)
}

/// `P[j^(n) not in optimal set]` per `n` of the replication's selector grid.
pub fn suboptimal_selection_diagnostic(rep: &ReplicateOutput, optimal: &[usize]) -> Vec<SelectionRow> {
    let j_count = rep.labels.len() - 1;
    rep.selection_grid
        .iter()
        .enumerate()
        .filter_map(|(i, &n)| {
            let picks: Vec<usize> = rep.runs.iter().filter_map(|r| r.selections[i]).collect();
            if picks.is_empty() {
                return None;
            }
            let total = picks.len() as f64;
            let mut per_learner = vec![0.0; j_count];
            for &j in &picks {
                per_learner[j] += 1.0 / total;
            }
            let suboptimal = picks.iter().filter(|j| !optimal.contains(j)).count() as f64 / total;
            Some(SelectionRow {
                n,
                runs: picks.len() as u64,
                suboptimal,
                per_learner,
            })
        })
        .collect()
}
