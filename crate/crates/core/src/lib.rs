//! Fair-comparison model selection for stochastic contextual bandits.
//!
//! A master algorithm ([`master::Master`]) routes each round to one of several
//! black-box base learners ([`learner::BanditLearner`]). On exploration rounds
//! it picks a learner uniformly; otherwise it compares every learner at the same
//! internal sample size and follows the one whose penalized empirical risk is
//! smallest. Feedback goes only to the learner that acted.
//!
//! The crate also ships two synthetic environments, three base learners and a
//! deterministic Monte-Carlo harness that writes CSV traces and aggregates.

pub mod env;
pub mod error;
pub mod harness;
pub mod learner;
pub mod master;
pub mod policy;
pub mod rng;
pub mod types;

pub use env::{EnvSpec, Environment, LinearGaussianEnv, OracleMethod, OracleValue, PiecewiseBernoulliEnv};
pub use error::{Error, Result};
pub use learner::{BanditLearner, EpsGreedyLearner, LearnerKind, LearnerSpec, LinUcbLearner, Ucb1Learner};
pub use master::{Master, MasterConfig, MasterState, RewardPrefix, RoundDecision};
pub use policy::{Policy, ValueEstimate};
pub use types::{Action, ActionCount, Context, Observation};
