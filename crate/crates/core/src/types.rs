//! Shared domain types.
//!
//! Actions are 0-based in memory and 1-based at every I/O boundary
//! ([`Action::one_based`], [`Action::from_one_based`]).

use std::fmt;

use crate::error::{Error, Result};

/// A covariate vector observed before each decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Context(Vec<f64>);

impl Context {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("context component {} is not finite", i + 1)));
        }
        Ok(Context(values))
    }

    /// Skips the finiteness check; used on the sampling hot path where
    /// components come from a normal sampler.
    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        Context(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<usize> for Context {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Number of available actions, `K >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ActionCount(usize);

impl ActionCount {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::domain(format!("need at least 2 actions, got {k}")));
        }
        Ok(ActionCount(k))
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn check(self, a: Action) -> Result<Action> {
        if a.0 < self.0 {
            Ok(a)
        } else {
            Err(Error::ActionOutOfRange {
                action: a.one_based(),
                k: self.0,
            })
        }
    }

    pub fn iter(self) -> impl Iterator<Item = Action> {
        (0..self.0).map(Action)
    }
}

/// An arm index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Action(usize);

impl Action {
    pub const fn new(index: usize) -> Self {
        Action(index)
    }

    pub fn from_one_based(a: usize) -> Result<Self> {
        match a {
            0 => Err(Error::domain("actions are numbered from 1")),
            a => Ok(Action(a - 1)),
        }
    }

    pub fn index(self) -> usize {
        self.0
    }

    pub fn one_based(self) -> usize {
        self.0 + 1
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.one_based())
    }
}

/// One round of feedback: the context, the action taken and the reward it earned.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub context: Context,
    pub action: Action,
    pub reward: f64,
}

impl Observation {
    pub fn new(context: Context, action: Action, reward: f64) -> Result<Self> {
        if !reward.is_finite() {
            return Err(Error::domain("reward is not finite"));
        }
        Ok(Observation {
            context,
            action,
            reward,
        })
    }
}
