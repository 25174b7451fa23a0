//! Single simulation runs.
//!
//! Run `r` of an experiment derives its streams from `(seed, r)`. The master
//! and every standalone learner replay the same environment stream, so all
//! policies in a run face identical contexts and reward noise.

use crate::env::Environment;
use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::learner::{BanditLearner, LearnerSpec};
use crate::master::{Master, MasterConfig, MasterState, RoundDecision};
use crate::rng::RunStreams;
use crate::types::{Action, Context, Observation};

/// The action/reward sequence of one simulated policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRun {
    pub label: String,
    pub actions: Vec<Action>,
    pub rewards: Vec<f64>,
    pub contexts: Option<Vec<Context>>,
}

impl PolicyRun {
    fn with_capacity(label: String, horizon: usize, record_contexts: bool) -> Self {
        PolicyRun {
            label,
            actions: Vec::with_capacity(horizon),
            rewards: Vec::with_capacity(horizon),
            contexts: record_contexts.then(|| Vec::with_capacity(horizon)),
        }
    }

    fn push(&mut self, o: Observation) {
        self.actions.push(o.action);
        self.rewards.push(o.reward);
        if let Some(c) = &mut self.contexts {
            c.push(o.context);
        }
    }

    pub fn cumulative_rewards(&self) -> Vec<f64> {
        self.rewards
            .iter()
            .scan(0.0, |acc, y| {
                *acc += y;
                Some(*acc)
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct MasterRun {
    pub run: PolicyRun,
    pub decisions: Vec<RoundDecision>,
    pub final_state: MasterState,
    pub config: MasterConfig,
}

impl MasterRun {
    /// Selector output `j^(n)` for each `n`, `None` where some learner has
    /// fewer than `n` rewards.
    pub fn selector_on(&self, grid: &[u64]) -> Vec<Option<usize>> {
        grid.iter()
            .map(|&n| self.final_state.selector_at(n, &self.config))
            .collect()
    }
}

/// Simulates the master for `horizon` rounds.
pub fn run_master(
    env: &dyn Environment,
    learners: &[LearnerSpec],
    config: MasterConfig,
    horizon: u64,
    streams: &mut RunStreams,
    record_contexts: bool,
) -> Result<MasterRun> {
    let built = learners
        .iter()
        .map(|s| s.build(env.num_actions(), env.dim()))
        .collect::<Result<Vec<_>>>()?;
    let mut master = Master::new(config.clone(), built)?;
    let mut run = PolicyRun::with_capacity("master".into(), horizon as usize, record_contexts);
    for _ in 0..horizon {
        let (_, obs) = master.step(env, &mut streams.master, &mut streams.action, &mut streams.env)?;
        run.push(obs);
    }
    Ok(MasterRun {
        run,
        decisions: master.selection_trace().to_vec(),
        final_state: master.state().clone(),
        config,
    })
}

/// Simulates one learner on its own. Uses only the action and environment
/// streams, in the same order as [`Master::step`].
pub fn run_standalone(
    env: &dyn Environment,
    learner: &mut dyn BanditLearner,
    label: String,
    horizon: u64,
    streams: &mut RunStreams,
    record_contexts: bool,
) -> Result<PolicyRun> {
    let mut run = PolicyRun::with_capacity(label, horizon as usize, record_contexts);
    for _ in 0..horizon {
        let x = env.sample_context(&mut streams.env);
        let a = learner.propose().sample(&x, &mut streams.action);
        let y = env.sample_reward(a, &x, &mut streams.env);
        let obs = Observation::new(x, a, y)?;
        learner.update(&obs)?;
        run.push(obs);
    }
    Ok(run)
}

/// The master and each base learner, run standalone on the same stream.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub run_id: u64,
    pub master: MasterRun,
    pub standalone: Vec<PolicyRun>,
}

pub fn run_one(cfg: &ExperimentConfig, run_id: u64) -> Result<RunOutput> {
    let env = cfg.env.build()?;
    let labels = cfg.policy_labels();
    let mut streams = RunStreams::new(cfg.seed, run_id);
    let master = run_master(
        env.as_ref(),
        &cfg.learners,
        cfg.master_config()?,
        cfg.horizon,
        &mut streams,
        cfg.record_contexts,
    )?;
    let standalone = cfg
        .learners
        .iter()
        .zip(&labels[1..])
        .map(|(spec, label)| {
            let mut learner = spec.build(env.num_actions(), env.dim())?;
            let mut streams = RunStreams::new(cfg.seed, run_id);
            run_standalone(
                env.as_ref(),
                learner.as_mut(),
                label.clone(),
                cfg.horizon,
                &mut streams,
                cfg.record_contexts,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunOutput {
        run_id,
        master,
        standalone,
    })
}

/// One line of a trace file. `selected` and `action` are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub policy: String,
    pub run_id: u64,
    pub t: u64,
    pub exploration: bool,
    pub selected: usize,
    pub comparison_n: u64,
    pub action: usize,
    pub reward: f64,
    pub cum_reward: f64,
    /// `(n(j,t), n_xplr(j,t))` for each learner.
    pub counts: Vec<(u64, u64)>,
    pub context: Option<Vec<f64>>,
}

impl TraceRow {
    pub fn avg_reward(&self) -> f64 {
        self.cum_reward / self.t as f64
    }
}

impl RunOutput {
    /// Master rows first, then each standalone learner. A standalone learner
    /// counts as selected, non-exploration, on every round.
    pub fn trace_rows(&self) -> Vec<TraceRow> {
        let j_count = self.standalone.len();
        let mut rows = Vec::with_capacity(self.master.run.rewards.len() * (j_count + 1));
        let mut counts = vec![(0u64, 0u64); j_count];
        let mut cum = 0.0;
        for (i, d) in self.master.decisions.iter().enumerate() {
            counts[d.selected].0 += 1;
            if d.exploration {
                counts[d.selected].1 += 1;
            }
            let reward = self.master.run.rewards[i];
            cum += reward;
            rows.push(TraceRow {
                policy: self.master.run.label.clone(),
                run_id: self.run_id,
                t: d.t,
                exploration: d.exploration,
                selected: d.selected + 1,
                comparison_n: d.comparison_n,
                action: self.master.run.actions[i].one_based(),
                reward,
                cum_reward: cum,
                counts: counts.clone(),
                context: self.master.run.contexts.as_ref().map(|c| c[i].as_slice().to_vec()),
            });
        }
        for (j, run) in self.standalone.iter().enumerate() {
            let mut cum = 0.0;
            for (i, (&a, &reward)) in run.actions.iter().zip(&run.rewards).enumerate() {
                cum += reward;
                let mut counts = vec![(0, 0); j_count];
                counts[j].0 = i as u64 + 1;
                rows.push(TraceRow {
                    policy: run.label.clone(),
                    run_id: self.run_id,
                    t: i as u64 + 1,
                    exploration: false,
                    selected: j + 1,
                    comparison_n: 0,
                    action: a.one_based(),
                    reward,
                    cum_reward: cum,
                    counts,
                    context: run.contexts.as_ref().map(|c| c[i].as_slice().to_vec()),
                });
            }
        }
        rows
    }
}
