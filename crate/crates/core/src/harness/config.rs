use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::env::EnvSpec;
use crate::error::{Error, Result};
use crate::learner::{LearnerKind, LearnerSpec};
use crate::master::{MasterConfig, RewardPrefix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceGranularity {
    Full,
    #[default]
    AggregateOnly,
}

impl FromStr for TraceGranularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" => Ok(TraceGranularity::Full),
            "aggregate" | "aggregate-only" => Ok(TraceGranularity::AggregateOnly),
            other => Err(Error::config(format!("unknown trace granularity '{other}'"))),
        }
    }
}

/// Everything needed to reproduce an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub env: EnvSpec,
    /// Order defines the learner index `j`.
    pub learners: Vec<LearnerSpec>,
    pub c1: f64,
    pub c2: f64,
    pub reward_prefix: RewardPrefix,
    pub horizon: u64,
    pub runs: u64,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub trace: TraceGranularity,
    /// Add the context columns to full traces.
    pub record_contexts: bool,
    /// Worker threads for replications; `None` uses all cores.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "env1".into(),
            env: EnvSpec::preset("env1").expect("preset exists"),
            learners: vec![
                LearnerSpec::default_for(LearnerKind::LinUcb),
                LearnerSpec::default_for(LearnerKind::EpsGreedy),
            ],
            c1: MasterConfig::DEFAULT_C1,
            c2: MasterConfig::DEFAULT_C2,
            reward_prefix: RewardPrefix::AllRounds,
            horizon: 10_000,
            runs: 100,
            seed: 0,
            out_dir: PathBuf::from("out"),
            trace: TraceGranularity::AggregateOnly,
            record_contexts: false,
            threads: None,
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub name: Option<String>,
    pub env: Option<String>,
    pub learners: Option<Vec<LearnerKind>>,
    pub alpha: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub reward_prefix: Option<RewardPrefix>,
    pub horizon: Option<u64>,
    pub runs: Option<u64>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub trace: Option<TraceGranularity>,
    pub record_contexts: Option<bool>,
    pub threads: Option<usize>,
}

fn parse_value<T: FromStr>(section: &str, key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(format!("[{section}] {key}: cannot parse '{value}'")))
}

fn parse_bool(section: &str, key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::config(format!(
            "[{section}] {key}: expected a boolean, got '{value}'"
        ))),
    }
}

impl ExperimentConfig {
    /// Reads a line-oriented `key = value` file with sections `[experiment]`,
    /// `[master]`, `[env]` and `[learner.N]`. Keys before any section belong to
    /// `[experiment]`.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_str_contents(&text)
    }

    pub fn from_str_contents(text: &str) -> Result<Self> {
        let ini = ini::Ini::load_from_str(text).map_err(|e| Error::config(format!("config syntax: {e}")))?;
        let mut cfg = ExperimentConfig::default();
        let mut learners: BTreeMap<u32, LearnerSpec> = BTreeMap::new();
        for (section, props) in ini.iter() {
            let section = section.unwrap_or("experiment");
            let map: BTreeMap<String, String> = props.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
            match section {
                "experiment" => {
                    for (key, value) in &map {
                        match key.as_str() {
                            "name" => cfg.name = value.trim().to_string(),
                            "horizon" => cfg.horizon = parse_value(section, key, value)?,
                            "runs" => cfg.runs = parse_value(section, key, value)?,
                            "seed" => cfg.seed = parse_value(section, key, value)?,
                            "out" => cfg.out_dir = PathBuf::from(value.trim()),
                            "threads" => cfg.threads = Some(parse_value(section, key, value)?),
                            "trace" => cfg.trace = value.parse()?,
                            "contexts" => cfg.record_contexts = parse_bool(section, key, value)?,
                            _ => return Err(Error::config(format!("unknown key '{key}' in [{section}]"))),
                        }
                    }
                }
                "master" => {
                    for (key, value) in &map {
                        match key.as_str() {
                            "c1" => cfg.c1 = parse_value(section, key, value)?,
                            "c2" => cfg.c2 = parse_value(section, key, value)?,
                            "reward_prefix" => cfg.reward_prefix = value.parse()?,
                            _ => return Err(Error::config(format!("unknown key '{key}' in [master]"))),
                        }
                    }
                }
                "env" => {
                    cfg.env = EnvSpec::from_properties(&map)?;
                    if !map.contains_key("name") && map.contains_key("preset") {
                        cfg.name = cfg.env.name().to_string();
                    }
                }
                s if s.starts_with("learner.") => {
                    let index: u32 = s["learner.".len()..]
                        .parse()
                        .map_err(|_| Error::config(format!("bad learner section [{s}]")))?;
                    learners.insert(index, LearnerSpec::from_properties(&map)?);
                }
                other => return Err(Error::config(format!("unknown section [{other}]"))),
            }
        }
        if !learners.is_empty() {
            cfg.learners = learners.into_values().collect();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(env) = &o.env {
            self.env = EnvSpec::preset(env)?;
            if o.name.is_none() {
                self.name = env.clone();
            }
        }
        if let Some(name) = &o.name {
            self.name = name.clone();
        }
        if let Some(kinds) = &o.learners {
            // keep hyperparameters from the file for kinds it already lists
            self.learners = kinds
                .iter()
                .map(|k| {
                    self.learners
                        .iter()
                        .find(|s| s.kind() == *k)
                        .copied()
                        .unwrap_or_else(|| LearnerSpec::default_for(*k))
                })
                .collect();
        }
        if let Some(a) = o.alpha {
            for spec in &mut self.learners {
                if let LearnerSpec::LinUcb { alpha, .. } = spec {
                    *alpha = a;
                }
            }
        }
        macro_rules! take {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = &o.$field { self.$target = v.clone(); })*
            };
        }
        take!(c1 => c1, c2 => c2, reward_prefix => reward_prefix, horizon => horizon, runs => runs,
              seed => seed, out_dir => out_dir, trace => trace, record_contexts => record_contexts);
        if o.threads.is_some() {
            self.threads = o.threads;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::config("horizon must be >= 1"));
        }
        if self.runs < 1 {
            return Err(Error::config("runs must be >= 1"));
        }
        if self.learners.is_empty() {
            return Err(Error::config("at least one learner is required"));
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads must be >= 1"));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::config(format!("bad experiment name '{}'", self.name)));
        }
        let env = self.env.build()?;
        for spec in &self.learners {
            spec.build(env.num_actions(), env.dim())?;
        }
        self.master_config()?;
        Ok(())
    }

    pub fn master_config(&self) -> Result<MasterConfig> {
        let betas = self.learners.iter().map(|s| s.kind().rate_exponent()).collect();
        Ok(MasterConfig::new(self.c1, self.c2, betas)?.with_reward_prefix(self.reward_prefix))
    }

    /// Column labels: `master` then one per learner; repeated kinds get a
    /// `_j` suffix (1-based).
    pub fn policy_labels(&self) -> Vec<String> {
        let mut labels = vec!["master".to_string()];
        for (j, spec) in self.learners.iter().enumerate() {
            let kind = spec.kind();
            let repeated = self.learners.iter().filter(|s| s.kind() == kind).count() > 1;
            labels.push(if repeated {
                format!("{kind}_{}", j + 1)
            } else {
                kind.to_string()
            });
        }
        labels
    }

    pub fn output_path(&self, artifact: &str) -> PathBuf {
        self.out_dir.join(format!("{}_{artifact}.csv", self.name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FILE: &str = "
[experiment]
name = quad
horizon = 500
runs = 7
seed = 42
trace = full

[master]
c1 = 0.1
c2 = 1
reward_prefix = exploration

[env]
kind = quadrant
arm.1 = 0.2, 0.2, 0.2, 0.2
arm.2 = 0.9, 0.1, 0.1, 0.9

[learner.2]
kind = epsgreedy

[learner.1]
kind = linucb
alpha = 0.3
";

    #[test]
    fn parses_all_sections() {
        let cfg = ExperimentConfig::from_str_contents(FILE).unwrap();
        assert_eq!(cfg.name, "quad");
        assert_eq!(cfg.horizon, 500);
        assert_eq!(cfg.runs, 7);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.trace, TraceGranularity::Full);
        assert_eq!(cfg.c1, 0.1);
        assert_eq!(cfg.c2, 1.0);
        assert_eq!(cfg.reward_prefix, RewardPrefix::ExplorationOnly);
        assert_eq!(
            cfg.learners,
            vec![
                LearnerSpec::LinUcb {
                    alpha: 0.3,
                    lambda: 1.0
                },
                LearnerSpec::default_for(LearnerKind::EpsGreedy)
            ]
        );
        assert_eq!(cfg.output_path("agg"), PathBuf::from("out/quad_agg.csv"));
    }

    #[test]
    fn flags_override_file() {
        let mut cfg = ExperimentConfig::from_str_contents(FILE).unwrap();
        cfg.apply(&Overrides {
            env: Some("env2".into()),
            learners: Some(vec![LearnerKind::EpsGreedy, LearnerKind::LinUcb, LearnerKind::Ucb1]),
            alpha: Some(2.0),
            c2: Some(5.0),
            horizon: Some(64),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(cfg.name, "env2");
        assert_eq!(cfg.env, EnvSpec::preset("env2").unwrap());
        assert_eq!(cfg.c2, 5.0);
        assert_eq!(cfg.c1, 0.1);
        assert_eq!(cfg.horizon, 64);
        assert_eq!(
            cfg.learners[1],
            LearnerSpec::LinUcb {
                alpha: 2.0,
                lambda: 1.0
            }
        );
        assert_eq!(cfg.policy_labels(), vec!["master", "epsgreedy", "linucb", "ucb1"]);
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "[experiment]\nhorizon = 0\n",
            "[experiment]\nhorizon = ten\n",
            "[experiment]\ncolour = blue\n",
            "[master]\nc1 = -1\n",
            "[env]\npreset = env9\n",
            "[learner.1]\nkind = exp3\n",
            "[learner.x]\nkind = ucb1\n",
            "[weird]\na = 1\n",
        ] {
            let err = ExperimentConfig::from_str_contents(bad).unwrap_err();
            assert!(err.is_config(), "{bad:?} gave {err}");
        }
    }

    #[test]
    fn repeated_kinds_get_indexed_labels() {
        let cfg = ExperimentConfig {
            learners: vec![
                LearnerSpec::default_for(LearnerKind::LinUcb),
                LearnerSpec::LinUcb {
                    alpha: 0.1,
                    lambda: 1.0,
                },
            ],
            ..Default::default()
        };
        assert_eq!(cfg.policy_labels(), vec!["master", "linucb_1", "linucb_2"]);
    }
}
