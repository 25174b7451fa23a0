use crate::error::Result;
use crate::learner::ridge::RidgeModel;
use crate::learner::{BanditLearner, LearnerKind};
use crate::policy::{argmax_lowest, point_mass, Policy};
use crate::types::{ActionCount, Context, Observation};

/// Disjoint-model LinUCB on the features `(1, x)`.
///
/// Plays `argmax_a theta_a . x~ + alpha * sqrt(x~^T A_a^{-1} x~)` with ties to
/// the lowest arm.
#[derive(Debug, Clone)]
pub struct LinUcbLearner {
    k: ActionCount,
    alpha: f64,
    arms: Vec<RidgeModel>,
    n: u64,
}

impl LinUcbLearner {
    pub const RATE_EXPONENT: f64 = 0.5;

    pub fn new(k: ActionCount, context_dim: usize, alpha: f64, lambda: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(crate::Error::domain(format!("LinUCB alpha must be >= 0, got {alpha}")));
        }
        let arms = (0..k.get())
            .map(|_| RidgeModel::new(context_dim + 1, lambda))
            .collect::<Result<_>>()?;
        Ok(LinUcbLearner { k, alpha, arms, n: 0 })
    }

    pub fn arm_model(&self, arm: usize) -> &RidgeModel {
        &self.arms[arm]
    }

    /// `(estimate, width)` for each arm.
    pub fn scores(&self, x: &Context) -> Vec<(f64, f64)> {
        let phi = features(x);
        self.arms
            .iter()
            .map(|m| (m.predict(&phi), m.quadratic_form(&phi).max(0.0).sqrt()))
            .collect()
    }
}

fn features(x: &Context) -> Vec<f64> {
    std::iter::once(1.0).chain(x.as_slice().iter().copied()).collect()
}

impl Policy for LinUcbLearner {
    fn num_actions(&self) -> ActionCount {
        self.k
    }

    fn action_probs(&self, x: &Context, probs: &mut [f64]) {
        let best = argmax_lowest(self.scores(x).into_iter().map(|(m, w)| m + self.alpha * w));
        point_mass(best, probs);
    }
}

impl BanditLearner for LinUcbLearner {
    fn kind(&self) -> LearnerKind {
        LearnerKind::LinUcb
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
        self.arms[o.action.index()].update(&features(&o.context), o.reward)?;
        self.n += 1;
        Ok(())
    }
}
