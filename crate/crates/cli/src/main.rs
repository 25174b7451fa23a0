use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ensbfc_core::env::{best_fixed_arm_value, best_quadrant_policy_value, ORACLE_SAMPLES, ORACLE_SEED};
use ensbfc_core::harness::io::{write_deviation, write_replication, write_selection, write_trace};
use ensbfc_core::harness::{
    deviation_diagnostic, dyadic_grid, optimal_set, replicate, run_one, suboptimal_selection_diagnostic,
    ExperimentConfig, Overrides, TraceGranularity, BURN_IN,
};
use ensbfc_core::{EnvSpec, Error, LearnerKind, OracleMethod, OracleValue, Result, RewardPrefix};

/// Fair-comparison model selection over contextual bandit learners.
#[derive(Parser)]
#[command(name = "ensbfc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one run and write its full trace.
    Run {
        #[command(flatten)]
        common: Common,
        /// Replication index whose random streams are used.
        #[arg(long, default_value_t = 0)]
        run_id: u64,
    },
    /// Simulate many runs and write per-round aggregates.
    Replicate {
        #[command(flatten)]
        common: Common,
        /// Also write every run's full trace.
        #[arg(long)]
        full_trace: bool,
    },
    /// Learner deviation and suboptimal-selection diagnostics.
    Diagnose {
        #[command(flatten)]
        common: Common,
        /// Standalone runs per learner for the deviation table.
        #[arg(long, default_value_t = 20)]
        deviation_runs: u64,
        /// Fresh contexts used to evaluate each policy.
        #[arg(long, default_value_t = 4)]
        eval_samples: usize,
        /// Tail threshold `c0:x`, counted as `excess > c0 n^(-beta) + x`. Repeatable.
        #[arg(long = "threshold", value_parser = parse_threshold, default_values = ["1:0"])]
        thresholds: Vec<(f64, f64)>,
    },
    /// Print the environment's oracle values.
    Value {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Environment preset: env1 or env2.
    #[arg(long)]
    env: Option<String>,
    /// Experiment name used in output file names.
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    runs: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    /// Rewards entering the risk estimate: all or exploration.
    #[arg(long)]
    reward_prefix: Option<RewardPrefix>,
    /// Comma-separated learner ids, e.g. linucb,epsgreedy,ucb1.
    #[arg(long, value_delimiter = ',')]
    learners: Option<Vec<LearnerKind>>,
    /// LinUCB confidence width multiplier.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add context columns to traces.
    #[arg(long)]
    contexts: bool,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        cfg.apply(&Overrides {
            name: self.name.clone(),
            env: self.env.clone(),
            learners: self.learners.clone(),
            alpha: self.alpha,
            c1: self.c1,
            c2: self.c2,
            reward_prefix: self.reward_prefix,
            horizon: self.horizon,
            runs: self.runs,
            seed: self.seed,
            out_dir: self.out.clone(),
            trace: None,
            record_contexts: self.contexts.then_some(true),
            threads: self.threads,
        })?;
        Ok(cfg)
    }
}

fn parse_threshold(s: &str) -> std::result::Result<(f64, f64), String> {
    let (c0, x) = s.split_once(':').ok_or("expected c0:x")?;
    let c0: f64 = c0.trim().parse().map_err(|_| format!("bad c0 '{c0}'"))?;
    let x: f64 = x.trim().parse().map_err(|_| format!("bad x '{x}'"))?;
    Ok((c0, x))
}

fn describe(v: &OracleValue) -> String {
    match v.method {
        OracleMethod::Exact => format!("{:.6} (exact)", v.value),
        OracleMethod::MonteCarlo { samples, std_error, .. } => {
            format!("{:.6} (Monte-Carlo, {samples} samples, se {std_error:.1e})", v.value)
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { common, run_id } => {
            let cfg = common.load()?;
            let out = run_one(&cfg, run_id)?;
            let path = cfg.output_path("trace");
            write_trace(&path, &out.trace_rows())?;
            println!("{}", path.display());
        }
        Command::Replicate { common, full_trace } => {
            let mut cfg = common.load()?;
            if full_trace {
                cfg.trace = TraceGranularity::Full;
            }
            let rep = replicate(&cfg)?;
            for path in write_replication(&cfg, &rep)? {
                println!("{}", path.display());
            }
            let last = rep.final_row();
            for (label, band) in rep.labels.iter().zip(&last.bands) {
                println!("{label}: mean cumulative reward at t={} is {:.3}", last.t, band.mean);
            }
        }
        Command::Diagnose {
            common,
            deviation_runs,
            eval_samples,
            thresholds,
        } => {
            let cfg = common.load()?;
            let grid = dyadic_grid(BURN_IN, cfg.horizon);
            if grid.is_empty() {
                return Err(Error::Config(format!("diagnostics need horizon >= {BURN_IN}")));
            }
            let optimal = optimal_set(&cfg.env, &cfg.learners)?;
            let tables = cfg
                .learners
                .iter()
                .map(|l| {
                    deviation_diagnostic(
                        &cfg.env,
                        *l,
                        &grid,
                        deviation_runs,
                        cfg.seed,
                        &thresholds,
                        eval_samples,
                        cfg.threads,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let path = cfg.output_path("diag_deviation");
            write_deviation(&path, &tables)?;
            println!("{}", path.display());

            let rep = replicate(&ExperimentConfig {
                trace: TraceGranularity::AggregateOnly,
                ..cfg.clone()
            })?;
            let rows: Vec<_> = suboptimal_selection_diagnostic(&rep, &optimal)
                .into_iter()
                .filter(|r| r.n >= BURN_IN)
                .collect();
            let path = cfg.output_path("diag_selection");
            write_selection(&path, &cfg.policy_labels()[1..], &rows)?;
            println!("{}", path.display());
        }
        Command::Value { common } => {
            let cfg = common.load()?;
            print_values(&cfg.env)?;
        }
    }
    Ok(())
}

fn print_values(spec: &EnvSpec) -> Result<()> {
    let env = spec.build()?;
    println!("environment: {}", spec.name());
    println!("optimal value: {}", describe(&env.optimal_value()));
    let quadrant = best_quadrant_policy_value(env.as_ref(), ORACLE_SAMPLES, ORACLE_SEED);
    let arms: Vec<String> = quadrant.policy.arms.iter().map(|a| a.to_string()).collect();
    println!(
        "best per-quadrant policy: {} (arms by quadrant {})",
        describe(&quadrant.value),
        arms.join(",")
    );
    let fixed = best_fixed_arm_value(env.as_ref(), ORACLE_SAMPLES, ORACLE_SEED);
    println!("best fixed arm {}: {}", fixed.policy.arm, describe(&fixed.value));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
