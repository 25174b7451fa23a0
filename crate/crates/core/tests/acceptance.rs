//! Statistical acceptance suite. Each test prints one `criterion N: PASS|FAIL`
//! line; run with `--nocapture` to see them all.

use std::path::Path;
use std::sync::OnceLock;

use ensbfc_core::harness::diagnostics::optimal_set;
use ensbfc_core::harness::io::{
    check_aggregate_file, check_trace_file, write_deviation, write_replication, write_selection,
};
use ensbfc_core::harness::regret::regret_from_cumulative;
use ensbfc_core::harness::*;
use ensbfc_core::rng::RunStreams;
use ensbfc_core::*;
use rand::{rngs::StdRng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

const HORIZON: u64 = 10_000;

fn report(n: u32, pass: bool, detail: String) {
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

fn config(env: &str, runs: u64) -> ExperimentConfig {
    ExperimentConfig {
        name: env.into(),
        env: EnvSpec::preset(env).unwrap(),
        horizon: HORIZON,
        runs,
        ..Default::default()
    }
}

fn replication(env: &str, runs: u64) -> &'static ReplicateOutput {
    static CELLS: [OnceLock<ReplicateOutput>; 4] = [const { OnceLock::new() }; 4];
    let slot = match (env, runs) {
        ("env1", 100) => 0,
        ("env2", 100) => 1,
        ("env1", 200) => 2,
        ("env2", 200) => 3,
        _ => unreachable!(),
    };
    CELLS[slot].get_or_init(|| replicate(&config(env, runs)).unwrap())
}

fn final_means(rep: &ReplicateOutput) -> (f64, f64, f64) {
    let b = &rep.final_row().bands;
    let col = |l: &str| b[rep.labels.iter().position(|x| x == l).unwrap()].mean;
    (col("master"), col("linucb"), col("epsgreedy"))
}

#[test]
fn criterion_1_rate_adaptivity_env1() {
    let (m, lin, eps) = final_means(replication("env1", 100));
    let pass = m >= 0.95 * eps && m >= 1.05 * lin;
    report(
        1,
        pass,
        format!(
            "master {m:.1}, epsgreedy {eps:.1} (ratio {:.3}), linucb {lin:.1} (ratio {:.3})",
            m / eps,
            m / lin
        ),
    );
}

#[test]
fn criterion_2_rate_adaptivity_env2() {
    let (m, lin, eps) = final_means(replication("env2", 100));
    let pass = m >= 0.95 * lin && m >= 1.05 * eps;
    report(
        2,
        pass,
        format!(
            "master {m:.1}, linucb {lin:.1} (ratio {:.3}), epsgreedy {eps:.1} (ratio {:.3})",
            m / lin,
            m / eps
        ),
    );
}

#[test]
fn criterion_3_master_rate_exponents() {
    let mut pass = true;
    let mut detail = Vec::new();
    for (env, lo, hi) in [("env1", -0.48, -0.18), ("env2", -0.65, -0.35)] {
        let rep = replication(env, 100);
        let v = EnvSpec::preset(env).unwrap().build().unwrap().optimal_value().value;
        let regret = regret_from_cumulative(&rep.mean_curve("master").unwrap(), v);
        let fit = fit_rate_exponent(&regret, BURN_IN).unwrap();
        pass &= fit.excluded.is_empty() && (lo..=hi).contains(&fit.slope);
        detail.push(format!("{env} slope {:.3} in [{lo}, {hi}]", fit.slope));
    }
    report(3, pass, detail.join("; "));
}

#[test]
fn criterion_4_exploration_count_identity() {
    // oracle: direct summation of min(1, c2 t^(-1/2)) with c2 = 10
    let expected: f64 = (1..=HORIZON).map(|t| (10.0 / (t as f64).sqrt()).min(1.0)).sum::<f64>() / 2.0;
    let mut pass = true;
    let mut detail = Vec::new();
    for env in ["env1", "env2"] {
        let rep = replication(env, 200);
        for j in 0..2 {
            let mean = rep.runs.iter().map(|r| r.final_counters[j].n_xplr as f64).sum::<f64>() / rep.runs.len() as f64;
            let rel = (mean - expected).abs() / expected;
            pass &= rel <= 0.05;
            detail.push(format!("{env} j={} {mean:.1} ({:.2}%)", j + 1, 100.0 * rel));
        }
    }
    report(4, pass, format!("expected {expected:.2}: {}", detail.join(", ")));
}

#[test]
fn criterion_5_suboptimal_selection_decay() {
    let cfg = config("env2", 200);
    let rep = replication("env2", 200);
    let optimal = optimal_set(&cfg.env, &cfg.learners).unwrap();
    // only grid points every run reached; later ones would be a biased subsample
    let rows: Vec<_> = suboptimal_selection_diagnostic(rep, &optimal)
        .into_iter()
        .filter(|r| r.n >= 64 && r.runs == cfg.runs)
        .collect();
    assert!(!rows.is_empty());
    let rises: Vec<f64> = rows
        .windows(2)
        .map(|w| w[1].suboptimal - w[0].suboptimal)
        .filter(|&d| d > 0.0)
        .collect();
    let last = rows.last().unwrap();
    let pass = last.suboptimal < 0.05 && rises.len() <= 1 && rises.iter().all(|&d| d <= 0.02);
    let curve: Vec<String> = rows.iter().map(|r| format!("{}:{:.3}", r.n, r.suboptimal)).collect();
    report(5, pass, format!("P[epsgreedy] by n {}", curve.join(" ")));
}

#[test]
fn criterion_6_single_learner_equivalence() {
    let mut checked = 0;
    for env in ["env1", "env2"] {
        for kind in [LearnerKind::LinUcb, LearnerKind::EpsGreedy] {
            for seed in 0..10 {
                let cfg = ExperimentConfig {
                    seed,
                    learners: vec![LearnerSpec::default_for(kind)],
                    ..config(env, 1)
                };
                let out = run_one(&cfg, 0).unwrap();
                let (m, s) = (&out.master.run, &out.standalone[0]);
                let same = m.actions == s.actions
                    && m.rewards
                        .iter()
                        .map(|r| r.to_bits())
                        .eq(s.rewards.iter().map(|r| r.to_bits()));
                let rows = out.trace_rows();
                let (mr, sr) = rows.split_at(HORIZON as usize);
                let rows_same = mr.iter().zip(sr).all(|(a, b)| {
                    a.t == b.t
                        && a.action == b.action
                        && a.reward.to_bits() == b.reward.to_bits()
                        && a.cum_reward.to_bits() == b.cum_reward.to_bits()
                        && a.counts[0].0 == b.counts[0].0
                });
                if !(same && rows_same) {
                    report(6, false, format!("{env} {kind} seed {seed} diverges"));
                }
                checked += 1;
            }
        }
    }
    report(6, true, format!("{checked} (env, learner, seed) traces bit-identical"));
}

#[test]
fn criterion_7_learner_deviation_slopes() {
    let grid = dyadic_grid(1, HORIZON);
    let slope = |env: &str, kind| {
        let t = deviation_diagnostic(
            &EnvSpec::preset(env).unwrap(),
            LearnerSpec::default_for(kind),
            &grid,
            20,
            0,
            &[],
            4,
            None,
        )
        .unwrap();
        let pts: Vec<(u64, f64)> = t
            .rows
            .iter()
            .filter(|r| r.n >= BURN_IN)
            .map(|r| (r.n, r.mean_excess))
            .collect();
        fit_power_law(&pts).unwrap()
    };
    let lin = slope("env2", LearnerKind::LinUcb);
    let eps = slope("env1", LearnerKind::EpsGreedy);

    // misspecified epsilon-greedy on env2: pseudo-regret over the last tenth
    let env = EnvSpec::preset("env2").unwrap().build().unwrap();
    let v = env.optimal_value().value;
    let start = (HORIZON - HORIZON / 10) as usize;
    let mut gap = 0.0;
    let mut count = 0.0;
    for run in 0..20 {
        let mut l = LearnerSpec::default_for(LearnerKind::EpsGreedy)
            .build(env.num_actions(), env.dim())
            .unwrap();
        let mut streams = RunStreams::new(0, run);
        let r = run_standalone(
            env.as_ref(),
            l.as_mut(),
            "epsgreedy".into(),
            HORIZON,
            &mut streams,
            true,
        )
        .unwrap();
        let xs = r.contexts.as_ref().unwrap();
        for (a, x) in r.actions[start..].iter().zip(&xs[start..]) {
            gap += v - env.true_mean(*a, x);
            count += 1.0;
        }
    }
    let last_decile = gap / count;

    let lin_ok = lin.excluded.is_empty() && (-0.65..=-0.35).contains(&lin.slope);
    let eps_ok = eps.excluded.is_empty() && (-0.48..=-0.18).contains(&eps.slope);
    let mis_ok = last_decile >= 0.02;
    report(
        7,
        lin_ok && eps_ok && mis_ok,
        format!(
            "linucb/env2 slope {:.3} in [-0.65, -0.35] {}; epsgreedy/env1 slope {:.3} in [-0.48, -0.18] {}; \
             epsgreedy/env2 last-decile regret {last_decile:.4} >= 0.02 {}",
            lin.slope,
            ok(lin_ok),
            eps.slope,
            ok(eps_ok),
            ok(mis_ok)
        ),
    );
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "MISSED"
    }
}

#[test]
fn criterion_8_oracle_values() {
    let v1 = EnvSpec::preset("env1").unwrap().build().unwrap().optimal_value().value;
    let v2 = EnvSpec::preset("env2").unwrap().build().unwrap().optimal_value().value;
    let closed = 0.9 + 1.72f64.sqrt() / (2.0 * std::f64::consts::PI).sqrt();

    // independent oracle: own generator, own arithmetic
    let mu = [[0.9, 0.5, 0.3, -0.9, -0.2], [0.9, -0.5, 0.1, -0.7, 0.6]];
    let mut rng = StdRng::seed_from_u64(20_240_601);
    let m = 10_000_000;
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..m {
        let x: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let value = |c: &[f64; 5]| c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[2] + c[4] * x[3];
        let best = value(&mu[0]).max(value(&mu[1]));
        sum += best;
        sq += best * best;
    }
    let mc = sum / m as f64;
    let se = ((sq / m as f64 - mc * mc) / m as f64).sqrt();

    let pass =
        v1 == 0.65 && (v2 - closed).abs() <= 0.005 && (v2 - mc).abs() <= 0.005 && (mc - closed).abs() <= 5.0 * se;
    report(
        8,
        pass,
        format!("env1 {v1}; env2 {v2:.5} vs closed form {closed:.5} and independent MC {mc:.5} (se {se:.1e})"),
    );
}

fn emit_all(dir: &Path, threads: usize) -> Vec<std::path::PathBuf> {
    let mut paths = Vec::new();
    for env in ["env1", "env2"] {
        let cfg = ExperimentConfig {
            horizon: 2_000,
            runs: 8,
            seed: 7,
            out_dir: dir.to_path_buf(),
            trace: TraceGranularity::Full,
            record_contexts: true,
            threads: Some(threads),
            ..config(env, 8)
        };
        let rep = replicate(&cfg).unwrap();
        for out in rep.outputs.as_ref().unwrap() {
            assert!(out.master.final_state.check_invariants());
        }
        paths.extend(write_replication(&cfg, &rep).unwrap());

        let grid = dyadic_grid(1, cfg.horizon);
        let tables: Vec<_> = cfg
            .learners
            .iter()
            .map(|l| {
                deviation_diagnostic(
                    &cfg.env,
                    *l,
                    &grid,
                    4,
                    cfg.seed,
                    &[(1.0, 0.0), (0.5, 0.01)],
                    2,
                    cfg.threads,
                )
            })
            .collect::<Result<_>>()
            .unwrap();
        let path = cfg.output_path("diag_deviation");
        write_deviation(&path, &tables).unwrap();
        paths.push(path);

        let optimal = optimal_set(&cfg.env, &cfg.learners).unwrap();
        let path = cfg.output_path("diag_selection");
        write_selection(
            &path,
            &cfg.policy_labels()[1..],
            &suboptimal_selection_diagnostic(&rep, &optimal),
        )
        .unwrap();
        paths.push(path);
    }
    paths
}

fn simplex_holds(env: &str) -> bool {
    let env = EnvSpec::preset(env).unwrap().build().unwrap();
    let mut streams = RunStreams::new(3, 0);
    let mut probs = vec![0.0; env.num_actions().get()];
    [LearnerKind::LinUcb, LearnerKind::EpsGreedy, LearnerKind::Ucb1]
        .into_iter()
        .all(|kind| {
            let mut l = LearnerSpec::default_for(kind)
                .build(env.num_actions(), env.dim())
                .unwrap();
            (0..2_000).all(|_| {
                let x = env.sample_context(&mut streams.env);
                l.propose().action_probs(&x, &mut probs);
                let on_simplex =
                    probs.iter().all(|&p| (0.0..=1.0).contains(&p)) && (probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12;
                let a = l.propose().sample(&x, &mut streams.action);
                let y = env.sample_reward(a, &x, &mut streams.env);
                l.update(&Observation::new(x, a, y).unwrap()).unwrap();
                on_simplex
            })
        })
}

#[test]
fn criterion_9_determinism_and_invariants() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let a = emit_all(first.path(), 1);
    let b = emit_all(second.path(), 4);
    assert_eq!(a.len(), b.len());
    let mut problems = Vec::new();
    for (pa, pb) in a.iter().zip(&b) {
        let name = pa.file_name().unwrap().to_string_lossy().into_owned();
        if std::fs::read(pa).unwrap() != std::fs::read(pb).unwrap() {
            problems.push(format!("{name} differs on rerun"));
        }
        let checked = if name.ends_with("_trace.csv") {
            Some(check_trace_file(pa))
        } else if name.ends_with("_agg.csv") {
            Some(check_aggregate_file(pa))
        } else {
            None
        };
        if let Some(Err(e)) = checked {
            problems.push(format!("{name}: {e}"));
        }
    }
    for env in ["env1", "env2"] {
        if !simplex_holds(env) {
            problems.push(format!("policy left the simplex on {env}"));
        }
    }
    report(
        9,
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "{} files byte-identical across thread counts, all invariants hold",
                a.len()
            )
        } else {
            problems.join("; ")
        },
    );
}
