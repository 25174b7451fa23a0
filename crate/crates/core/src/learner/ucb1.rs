use crate::error::Result;
use crate::learner::{BanditLearner, LearnerKind};
use crate::policy::{argmax_lowest, point_mass, Policy};
use crate::types::{ActionCount, Context, Observation};

/// Context-free UCB1: plays each arm once, then
/// `argmax_a mean_a + sqrt(2 ln n / n_a)`.
#[derive(Debug, Clone)]
pub struct Ucb1Learner {
    k: ActionCount,
    pulls: Vec<u64>,
    sums: Vec<f64>,
    n: u64,
}

impl Ucb1Learner {
    pub const RATE_EXPONENT: f64 = 0.5;

    pub fn new(k: ActionCount) -> Self {
        Ucb1Learner {
            k,
            pulls: vec![0; k.get()],
            sums: vec![0.0; k.get()],
            n: 0,
        }
    }

    pub fn pulls(&self) -> &[u64] {
        &self.pulls
    }

    pub fn reward_sums(&self) -> &[f64] {
        &self.sums
    }

    pub fn bonus(&self, arm: usize) -> f64 {
        (2.0 * (self.n as f64).ln() / self.pulls[arm] as f64).sqrt()
    }

    fn choice(&self) -> usize {
        if let Some(unplayed) = self.pulls.iter().position(|&c| c == 0) {
            return unplayed;
        }
        argmax_lowest((0..self.k.get()).map(|a| self.sums[a] / self.pulls[a] as f64 + self.bonus(a)))
    }
}

impl Policy for Ucb1Learner {
    fn num_actions(&self) -> ActionCount {
        self.k
    }

    fn action_probs(&self, _x: &Context, probs: &mut [f64]) {
        point_mass(self.choice(), probs);
    }
}

impl BanditLearner for Ucb1Learner {
    fn kind(&self) -> LearnerKind {
        LearnerKind::Ucb1
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
        let a = o.action.index();
        self.pulls[a] += 1;
        self.sums[a] += o.reward;
        self.n += 1;
        Ok(())
    }
}
