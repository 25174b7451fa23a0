//! Base contextual-bandit learners behind a common contract.

mod epsgreedy;
mod linucb;
pub mod ridge;
mod ucb1;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub use epsgreedy::EpsGreedyLearner;
pub use linucb::LinUcbLearner;
pub use ucb1::Ucb1Learner;

use crate::env::ModelFamily;
use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::types::{ActionCount, Observation};

/// A stateful base algorithm.
///
/// The current policy is a deterministic function of the observations fed so
/// far; all randomness is drawn when an action is sampled from it.
pub trait BanditLearner: Policy + Send {
    fn kind(&self) -> LearnerKind;

    /// Number of observations ingested so far.
    fn internal_time(&self) -> u64;

    /// Known regret exponent: regret over `n` rounds is `O~(n^(1 - beta))`.
    fn rate_exponent(&self) -> f64;

    /// The policy for the learner's next round.
    fn propose(&self) -> &dyn Policy;

    fn update(&mut self, o: &Observation) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LearnerKind {
    LinUcb,
    EpsGreedy,
    Ucb1,
}

impl LearnerKind {
    pub fn id(self) -> &'static str {
        match self {
            LearnerKind::LinUcb => "linucb",
            LearnerKind::EpsGreedy => "epsgreedy",
            LearnerKind::Ucb1 => "ucb1",
        }
    }

    pub fn rate_exponent(self) -> f64 {
        match self {
            LearnerKind::LinUcb => LinUcbLearner::RATE_EXPONENT,
            LearnerKind::EpsGreedy => EpsGreedyLearner::RATE_EXPONENT,
            LearnerKind::Ucb1 => Ucb1Learner::RATE_EXPONENT,
        }
    }

    /// Whether the learner's model class contains the optimal measurable
    /// policy of every environment in `family`.
    pub fn is_realizable(self, family: ModelFamily) -> bool {
        matches!(
            (self, family),
            (LearnerKind::LinUcb, ModelFamily::Linear) | (LearnerKind::EpsGreedy, ModelFamily::Quadrant)
        )
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "linucb" => Ok(LearnerKind::LinUcb),
            "epsgreedy" => Ok(LearnerKind::EpsGreedy),
            "ucb1" => Ok(LearnerKind::Ucb1),
            other => Err(Error::config(format!(
                "unknown learner '{other}' (expected linucb, epsgreedy or ucb1)"
            ))),
        }
    }
}

/// Learner id plus hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearnerSpec {
    LinUcb { alpha: f64, lambda: f64 },
    EpsGreedy { lambda: f64 },
    Ucb1,
}

impl LearnerSpec {
    pub fn default_for(kind: LearnerKind) -> Self {
        match kind {
            LearnerKind::LinUcb => LearnerSpec::LinUcb {
                alpha: 1.0,
                lambda: 1.0,
            },
            LearnerKind::EpsGreedy => LearnerSpec::EpsGreedy {
                lambda: EpsGreedyLearner::DEFAULT_LAMBDA,
            },
            LearnerKind::Ucb1 => LearnerSpec::Ucb1,
        }
    }

    pub fn kind(&self) -> LearnerKind {
        match self {
            LearnerSpec::LinUcb { .. } => LearnerKind::LinUcb,
            LearnerSpec::EpsGreedy { .. } => LearnerKind::EpsGreedy,
            LearnerSpec::Ucb1 => LearnerKind::Ucb1,
        }
    }

    /// Parses a `[learner.N]` section: `kind` plus optional `alpha` / `lambda`.
    pub fn from_properties(props: &BTreeMap<String, String>) -> Result<Self> {
        let kind: LearnerKind = props
            .get("kind")
            .ok_or_else(|| Error::config("learner section needs 'kind'"))?
            .parse()?;
        let mut spec = Self::default_for(kind);
        for (key, value) in props {
            let parse = || {
                value
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::config(format!("{key}: '{value}' is not a number")))
            };
            match (&mut spec, key.as_str()) {
                (_, "kind") => {}
                (LearnerSpec::LinUcb { alpha, .. }, "alpha") => *alpha = parse()?,
                (LearnerSpec::LinUcb { lambda, .. } | LearnerSpec::EpsGreedy { lambda }, "lambda") => {
                    *lambda = parse()?
                }
                _ => return Err(Error::config(format!("unknown key '{key}' for learner {kind}"))),
            }
        }
        Ok(spec)
    }

    pub fn build(&self, k: ActionCount, context_dim: usize) -> Result<Box<dyn BanditLearner>> {
        Ok(match *self {
            LearnerSpec::LinUcb { alpha, lambda } => Box::new(LinUcbLearner::new(k, context_dim, alpha, lambda)?),
            LearnerSpec::EpsGreedy { lambda } => {
                if context_dim < 2 {
                    return Err(Error::config(
                        "epsgreedy's quadrant features need context dimension >= 2",
                    ));
                }
                Box::new(EpsGreedyLearner::new(k, lambda)?)
            }
            LearnerSpec::Ucb1 => Box::new(Ucb1Learner::new(k)),
        })
    }
}
