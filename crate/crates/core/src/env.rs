//! Synthetic stochastic environments.
//!
//! Two parameterized families are provided, each with a named preset:
//!
//! * [`PiecewiseBernoulliEnv`]: Bernoulli rewards whose mean depends only on the
//!   sign quadrant of `(x1, x2)`. Preset `env1`.
//! * [`LinearGaussianEnv`]: Gaussian rewards with per-arm affine means and unit
//!   noise. Preset `env2`.
//!
//! Contexts are standard normal in both families.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{stream, StreamTag};
use crate::types::{Action, ActionCount, Context};

/// Which reward model a family belongs to; decides which learners are
/// well-specified for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFamily {
    Quadrant,
    Linear,
}

/// How an oracle value was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleMethod {
    Exact,
    MonteCarlo { samples: usize, seed: u64, std_error: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValue {
    pub value: f64,
    pub method: OracleMethod,
}

/// A stationary contextual bandit environment.
///
/// `sample_reward` consumes the same amount of randomness whichever arm is
/// played, so runs that share an environment stream see the same contexts
/// and the same noise.
pub trait Environment: Send + Sync {
    fn name(&self) -> &str;
    fn num_actions(&self) -> ActionCount;
    fn dim(&self) -> usize;
    fn family(&self) -> ModelFamily;
    fn sample_context(&self, rng: &mut dyn RngCore) -> Context;
    fn sample_reward(&self, a: Action, x: &Context, rng: &mut dyn RngCore) -> f64;
    fn true_mean(&self, a: Action, x: &Context) -> f64;
    /// `E[max_a mu_a(X)]`, the value of the optimal measurable policy.
    fn optimal_value(&self) -> OracleValue;
}

fn standard_normal_context(dim: usize, rng: &mut dyn RngCore) -> Context {
    Context::from_vec_unchecked((0..dim).map(|_| rng.sample(StandardNormal)).collect())
}

/// Quadrant of `(x1, x2)`: 0 = (<0, <0), 1 = (<0, >=0), 2 = (>=0, <0), 3 = (>=0, >=0).
pub fn quadrant(x: &Context) -> usize {
    2 * usize::from(x[0] >= 0.0) + usize::from(x[1] >= 0.0)
}

/// Bernoulli rewards with mean `table[a][quadrant(x)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseBernoulliEnv {
    name: String,
    table: Vec<[f64; 4]>,
    dim: usize,
}

impl PiecewiseBernoulliEnv {
    pub fn new(table: impl Into<Vec<[f64; 4]>>, dim: usize) -> Result<Self> {
        let table = table.into();
        ActionCount::new(table.len())?;
        if dim < 2 {
            return Err(Error::domain("quadrant environment needs dimension >= 2"));
        }
        if table.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::domain("quadrant means must lie in [0, 1]"));
        }
        Ok(PiecewiseBernoulliEnv {
            name: "custom".into(),
            table,
            dim,
        })
    }

    /// Two Bernoulli arms whose means depend only on the signs of `x1, x2`.
    pub fn env1() -> Self {
        PiecewiseBernoulliEnv {
            name: "env1".into(),
            table: vec![[0.1, 0.5, 0.7, 0.45], [0.8, 0.1, 0.3, 0.6]],
            dim: 4,
        }
    }

    pub fn table(&self) -> &[[f64; 4]] {
        &self.table
    }
}

impl Environment for PiecewiseBernoulliEnv {
    fn name(&self) -> &str {
        &self.name
    }

    fn num_actions(&self) -> ActionCount {
        ActionCount::new(self.table.len()).expect("validated at construction")
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn family(&self) -> ModelFamily {
        ModelFamily::Quadrant
    }

    fn sample_context(&self, rng: &mut dyn RngCore) -> Context {
        standard_normal_context(self.dim, rng)
    }

    fn sample_reward(&self, a: Action, x: &Context, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rng.gen();
        if u < self.true_mean(a, x) {
            1.0
        } else {
            0.0
        }
    }

    fn true_mean(&self, a: Action, x: &Context) -> f64 {
        self.table[a.index()][quadrant(x)]
    }

    fn optimal_value(&self) -> OracleValue {
        // quadrants are equiprobable under a centred isotropic normal
        let total: f64 = (0..4)
            .map(|q| self.table.iter().map(|arm| arm[q]).fold(f64::NEG_INFINITY, f64::max))
            .sum();
        OracleValue {
            value: 0.25 * total,
            method: OracleMethod::Exact,
        }
    }
}

pub const ORACLE_SAMPLES: usize = 1_000_000;
pub const ORACLE_SEED: u64 = 0x00E5_BFC0;

/// Gaussian rewards `mu_a(x) + noise_sd * eta` with `mu_a(x) = c_a0 + c_a . x`.
#[derive(Debug)]
pub struct LinearGaussianEnv {
    name: String,
    coefficients: Vec<Vec<f64>>,
    noise_sd: f64,
    oracle: OnceLock<OracleValue>,
}

impl LinearGaussianEnv {
    /// `coefficients[a]` holds the intercept followed by one slope per context component.
    pub fn new(coefficients: Vec<Vec<f64>>, noise_sd: f64) -> Result<Self> {
        ActionCount::new(coefficients.len())?;
        let width = coefficients[0].len();
        if width < 2 {
            return Err(Error::domain("linear arm needs an intercept and at least one slope"));
        }
        if coefficients.iter().any(|c| c.len() != width) {
            return Err(Error::domain("all arms need the same number of coefficients"));
        }
        if coefficients.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::domain("coefficients must be finite"));
        }
        if !(noise_sd.is_finite() && noise_sd >= 0.0) {
            return Err(Error::domain("noise standard deviation must be finite and >= 0"));
        }
        Ok(LinearGaussianEnv {
            name: "custom".into(),
            coefficients,
            noise_sd,
            oracle: OnceLock::new(),
        })
    }

    /// The linear environment from the simulation study.
    pub fn env2() -> Self {
        LinearGaussianEnv {
            name: "env2".into(),
            coefficients: vec![vec![0.9, 0.5, 0.3, -0.9, -0.2], vec![0.9, -0.5, 0.1, -0.7, 0.6]],
            noise_sd: 1.0,
            oracle: OnceLock::new(),
        }
    }

    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coefficients
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }
}

impl Clone for LinearGaussianEnv {
    fn clone(&self) -> Self {
        LinearGaussianEnv {
            name: self.name.clone(),
            coefficients: self.coefficients.clone(),
            noise_sd: self.noise_sd,
            oracle: self.oracle.clone(),
        }
    }
}

impl Environment for LinearGaussianEnv {
    fn name(&self) -> &str {
        &self.name
    }

    fn num_actions(&self) -> ActionCount {
        ActionCount::new(self.coefficients.len()).expect("validated at construction")
    }

    fn dim(&self) -> usize {
        self.coefficients[0].len() - 1
    }

    fn family(&self) -> ModelFamily {
        ModelFamily::Linear
    }

    fn sample_context(&self, rng: &mut dyn RngCore) -> Context {
        standard_normal_context(self.dim(), rng)
    }

    fn sample_reward(&self, a: Action, x: &Context, rng: &mut dyn RngCore) -> f64 {
        let eta: f64 = rng.sample(StandardNormal);
        self.true_mean(a, x) + self.noise_sd * eta
    }

    fn true_mean(&self, a: Action, x: &Context) -> f64 {
        let c = &self.coefficients[a.index()];
        c[0] + c[1..].iter().zip(x.as_slice()).map(|(b, v)| b * v).sum::<f64>()
    }

    fn optimal_value(&self) -> OracleValue {
        *self.oracle.get_or_init(|| {
            let mut rng = stream(ORACLE_SEED, 0, StreamTag::Oracle);
            let k = self.num_actions();
            let est = crate::policy::ValueEstimate::from_samples((0..ORACLE_SAMPLES).map(|_| {
                let x = self.sample_context(&mut rng);
                k.iter()
                    .map(|a| self.true_mean(a, &x))
                    .fold(f64::NEG_INFINITY, f64::max)
            }));
            OracleValue {
                value: est.mean,
                method: OracleMethod::MonteCarlo {
                    samples: ORACLE_SAMPLES,
                    seed: ORACLE_SEED,
                    std_error: est.std_error,
                },
            }
        })
    }
}

/// The best policy in a restricted class together with its value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestInClass<P> {
    pub policy: P,
    pub value: OracleValue,
}

/// Best policy that is constant on each `(x1, x2)` sign quadrant: plays
/// `argmax_a E[mu_a(X) 1(X in q)]` on quadrant `q`. Exact for quadrant
/// environments; otherwise arms are chosen and valued by Monte-Carlo on
/// common samples.
pub fn best_quadrant_policy_value(
    env: &dyn Environment,
    samples: usize,
    seed: u64,
) -> BestInClass<crate::policy::QuadrantPolicy> {
    let k = env.num_actions();
    if let ModelFamily::Quadrant = env.family() {
        // one representative context per quadrant suffices
        let arms = [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)].map(|(a, b)| {
            let mut v = vec![0.0; env.dim()];
            v[0] = a;
            v[1] = b;
            let x = Context::from_vec_unchecked(v);
            Action::new(crate::policy::argmax_lowest(k.iter().map(|arm| env.true_mean(arm, &x))))
        });
        return BestInClass {
            policy: crate::policy::QuadrantPolicy { k, arms },
            value: env.optimal_value(),
        };
    }
    let mut rng = stream(seed, 1, StreamTag::Oracle);
    let mut sums = vec![[0.0f64; 4]; k.get()];
    let mut per_sample = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x = env.sample_context(&mut rng);
        let q = quadrant(&x);
        let means: Vec<f64> = k.iter().map(|a| env.true_mean(a, &x)).collect();
        for (a, m) in means.iter().enumerate() {
            sums[a][q] += m;
        }
        per_sample.push((q, means));
    }
    let arms: [Action; 4] =
        std::array::from_fn(|q| Action::new(crate::policy::argmax_lowest(sums.iter().map(|s| s[q]))));
    let est = crate::policy::ValueEstimate::from_samples(per_sample.iter().map(|(q, means)| means[arms[*q].index()]));
    BestInClass {
        policy: crate::policy::QuadrantPolicy { k, arms },
        value: OracleValue {
            value: est.mean,
            method: OracleMethod::MonteCarlo {
                samples,
                seed,
                std_error: est.std_error,
            },
        },
    }
}

/// Best context-free policy, `argmax_a E[mu_a(X)]`, by Monte-Carlo.
pub fn best_fixed_arm_value(
    env: &dyn Environment,
    samples: usize,
    seed: u64,
) -> BestInClass<crate::policy::FixedArmPolicy> {
    let k = env.num_actions();
    let mut rng = stream(seed, 2, StreamTag::Oracle);
    let mut sums = vec![0.0; k.get()];
    let mut per_sample = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x = env.sample_context(&mut rng);
        let means: Vec<f64> = k.iter().map(|a| env.true_mean(a, &x)).collect();
        for (s, m) in sums.iter_mut().zip(&means) {
            *s += m;
        }
        per_sample.push(means);
    }
    let best = crate::policy::argmax_lowest(sums.iter().copied());
    let est = crate::policy::ValueEstimate::from_samples(per_sample.iter().map(|m| m[best]));
    BestInClass {
        policy: crate::policy::FixedArmPolicy {
            k,
            arm: Action::new(best),
        },
        value: OracleValue {
            value: est.mean,
            method: OracleMethod::MonteCarlo {
                samples,
                seed,
                std_error: est.std_error,
            },
        },
    }
}

/// A buildable environment description: preset id or explicit parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    Quadrant {
        name: String,
        table: Vec<[f64; 4]>,
        dim: usize,
    },
    Linear {
        name: String,
        coefficients: Vec<Vec<f64>>,
        noise_sd: f64,
    },
}

impl EnvSpec {
    pub fn preset(id: &str) -> Result<Self> {
        match id {
            "env1" => {
                let e = PiecewiseBernoulliEnv::env1();
                Ok(EnvSpec::Quadrant {
                    name: "env1".into(),
                    table: e.table,
                    dim: e.dim,
                })
            }
            "env2" => {
                let e = LinearGaussianEnv::env2();
                Ok(EnvSpec::Linear {
                    name: "env2".into(),
                    coefficients: e.coefficients,
                    noise_sd: e.noise_sd,
                })
            }
            other => Err(Error::config(format!(
                "unknown environment preset '{other}' (expected env1 or env2)"
            ))),
        }
    }

    /// Parses an `[env]` section. Either `preset = env1|env2`, or
    /// `kind = quadrant|linear` with `arm.1 = ...`, `arm.2 = ...` as
    /// comma-separated reals (quadrant means, or intercept then slopes),
    /// plus optional `dim` (quadrant) / `noise_sd` (linear) and `name`.
    pub fn from_properties(props: &BTreeMap<String, String>) -> Result<Self> {
        if let Some(p) = props.get("preset") {
            return Self::preset(p.trim());
        }
        let kind = props
            .get("kind")
            .ok_or_else(|| Error::config("[env] needs either 'preset' or 'kind'"))?;
        let name = props.get("name").cloned().unwrap_or_else(|| "custom".into());
        let mut arms = Vec::new();
        for a in 1.. {
            match props.get(&format!("arm.{a}")) {
                Some(v) => arms.push(parse_reals(v).map_err(|e| Error::config(format!("arm.{a}: {e}")))?),
                None => break,
            }
        }
        let spec = match kind.trim() {
            "quadrant" => {
                let table = arms
                    .into_iter()
                    .enumerate()
                    .map(|(i, v)| {
                        <[f64; 4]>::try_from(v.as_slice())
                            .map_err(|_| Error::config(format!("arm.{} needs exactly 4 quadrant means", i + 1)))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let dim = match props.get("dim") {
                    Some(d) => d.trim().parse().map_err(|_| Error::config(format!("bad dim '{d}'")))?,
                    None => 4,
                };
                EnvSpec::Quadrant { name, table, dim }
            }
            "linear" => {
                let noise_sd = match props.get("noise_sd") {
                    Some(s) => s
                        .trim()
                        .parse()
                        .map_err(|_| Error::config(format!("bad noise_sd '{s}'")))?,
                    None => 1.0,
                };
                EnvSpec::Linear {
                    name,
                    coefficients: arms,
                    noise_sd,
                }
            }
            other => {
                return Err(Error::config(format!(
                    "unknown env kind '{other}' (expected quadrant or linear)"
                )))
            }
        };
        spec.build().map_err(|e| Error::config(e.to_string()))?;
        Ok(spec)
    }

    pub fn name(&self) -> &str {
        match self {
            EnvSpec::Quadrant { name, .. } | EnvSpec::Linear { name, .. } => name,
        }
    }

    pub fn build(&self) -> Result<Box<dyn Environment>> {
        Ok(match self {
            EnvSpec::Quadrant { name, table, dim } => {
                let mut e = PiecewiseBernoulliEnv::new(table.clone(), *dim)?;
                e.name = name.clone();
                Box::new(e)
            }
            EnvSpec::Linear {
                name,
                coefficients,
                noise_sd,
            } => {
                let mut e = LinearGaussianEnv::new(coefficients.clone(), *noise_sd)?;
                e.name = name.clone();
                Box::new(e)
            }
        })
    }
}

pub(crate) fn parse_reals(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>().map_err(|_| format!("'{t}' is not a number"))
        })
        .collect()
}
