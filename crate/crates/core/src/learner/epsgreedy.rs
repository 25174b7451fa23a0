use crate::env::quadrant;
use crate::error::Result;
use crate::learner::ridge::RidgeModel;
use crate::learner::{BanditLearner, LearnerKind};
use crate::policy::{argmax_lowest, Policy};
use crate::types::{ActionCount, Context, Observation};

/// Epsilon-greedy over a per-arm quadrant-indicator reward model.
///
/// Each arm's mean is fitted as
/// `b0 + b1 1(x1<0, x2<0) + b2 1(x1<0, x2>=0) + b3 1(x1>=0, x2>=0)`
/// by ridge regression; at round `t = n + 1` the greedy arm gets
/// `1 - eps_t + eps_t / K` and every other arm `eps_t / K`, with `eps_t = t^(-1/3)`.
#[derive(Debug, Clone)]
pub struct EpsGreedyLearner {
    k: ActionCount,
    arms: Vec<RidgeModel>,
    n: u64,
}

impl EpsGreedyLearner {
    pub const RATE_EXPONENT: f64 = 1.0 / 3.0;
    pub const DEFAULT_LAMBDA: f64 = 1e-6;

    pub fn new(k: ActionCount, lambda: f64) -> Result<Self> {
        let arms = (0..k.get())
            .map(|_| RidgeModel::new(4, lambda))
            .collect::<Result<_>>()?;
        Ok(EpsGreedyLearner { k, arms, n: 0 })
    }

    /// Exploration rate at round `t >= 1`.
    pub fn epsilon(t: u64) -> f64 {
        (t.max(1) as f64).powf(-Self::RATE_EXPONENT)
    }

    pub fn features(x: &Context) -> [f64; 4] {
        let q = quadrant(x);
        [1.0, f64::from(q == 0), f64::from(q == 1), f64::from(q == 3)]
    }

    pub fn arm_model(&self, arm: usize) -> &RidgeModel {
        &self.arms[arm]
    }

    pub fn greedy_arm(&self, x: &Context) -> usize {
        let phi = Self::features(x);
        argmax_lowest(self.arms.iter().map(|m| m.predict(&phi)))
    }
}

impl Policy for EpsGreedyLearner {
    fn num_actions(&self) -> ActionCount {
        self.k
    }

    fn action_probs(&self, x: &Context, probs: &mut [f64]) {
        let eps = Self::epsilon(self.n + 1);
        let k = self.k.get() as f64;
        probs.fill(eps / k);
        probs[self.greedy_arm(x)] += 1.0 - eps;
    }
}

impl BanditLearner for EpsGreedyLearner {
    fn kind(&self) -> LearnerKind {
        LearnerKind::EpsGreedy
    }

    fn internal_time(&self) -> u64 {
        self.n
    }

    fn rate_exponent(&self) -> f64 {
        Self::RATE_EXPONENT
    }

    fn propose(&self) -> &dyn Policy {
        self
    }

    fn update(&mut self, o: &Observation) -> Result<()> {
        self.arms[o.action.index()].update(&Self::features(&o.context), o.reward)?;
        self.n += 1;
        Ok(())
    }
}
