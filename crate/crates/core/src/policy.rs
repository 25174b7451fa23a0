//! Policies and the value/loss/risk functionals defined on them.

use rand::{Rng, RngCore};

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::types::{Action, ActionCount, Context, Observation};

/// A conditional distribution over actions given a context.
pub trait Policy {
    fn num_actions(&self) -> ActionCount;

    /// Writes `pi(a | x)` for every arm into `probs` (length K).
    fn action_probs(&self, x: &Context, probs: &mut [f64]);

    fn prob(&self, a: Action, x: &Context) -> f64 {
        let mut probs = vec![0.0; self.num_actions().get()];
        self.action_probs(x, &mut probs);
        probs[a.index()]
    }

    /// Draws an action. Consumes exactly one uniform from `rng` whatever the policy.
    fn sample(&self, x: &Context, rng: &mut dyn RngCore) -> Action {
        let mut probs = vec![0.0; self.num_actions().get()];
        self.action_probs(x, &mut probs);
        sample_from_probs(&probs, rng.gen::<f64>())
    }
}

/// Inverse-CDF draw with `u` in `[0, 1)`.
pub fn sample_from_probs(probs: &[f64], u: f64) -> Action {
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
        }
        cum += p;
        if u < cum {
            return Action::new(i);
        }
    }
    // rounding left cum slightly below 1
    Action::new(last_positive)
}

/// Writes a point mass on `arm`.
pub(crate) fn point_mass(arm: usize, probs: &mut [f64]) {
    probs.fill(0.0);
    probs[arm] = 1.0;
}

/// Index of the largest score; ties go to the lowest index.
pub(crate) fn argmax_lowest(scores: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, s) in scores.into_iter().enumerate() {
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    best
}

/// The uniform reference policy `1/K`.
#[derive(Debug, Clone, Copy)]
pub struct UniformPolicy {
    pub k: ActionCount,
}

impl Policy for UniformPolicy {
    fn num_actions(&self) -> ActionCount {
        self.k
    }

    fn action_probs(&self, _x: &Context, probs: &mut [f64]) {
        probs.fill(1.0 / self.k.get() as f64);
    }
}

/// Always plays the same arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedArmPolicy {
    pub k: ActionCount,
    pub arm: Action,
}

impl Policy for FixedArmPolicy {
    fn num_actions(&self) -> ActionCount {
        self.k
    }

    fn action_probs(&self, _x: &Context, probs: &mut [f64]) {
        point_mass(self.arm.index(), probs);
    }
}

/// Plays a fixed arm on each `(x1, x2)` sign quadrant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrantPolicy {
    pub k: ActionCount,
    pub arms: [Action; 4],
}

impl Policy for QuadrantPolicy {
    fn num_actions(&self) -> ActionCount {
        self.k
    }

    fn action_probs(&self, x: &Context, probs: &mut [f64]) {
        point_mass(self.arms[crate::env::quadrant(x)].index(), probs);
    }
}

/// Greedy with respect to an environment's true conditional means: the optimal
/// measurable policy.
pub struct OraclePolicy<'a> {
    pub env: &'a dyn Environment,
}

impl Policy for OraclePolicy<'_> {
    fn num_actions(&self) -> ActionCount {
        self.env.num_actions()
    }

    fn action_probs(&self, x: &Context, probs: &mut [f64]) {
        let best = argmax_lowest(self.env.num_actions().iter().map(|a| self.env.true_mean(a, x)));
        point_mass(best, probs);
    }
}

/// `pi_ref(a, x) = 1/K`.
pub fn reference_policy_prob(a: Action, _x: &Context, k: ActionCount) -> Result<f64> {
    k.check(a)?;
    Ok(1.0 / k.get() as f64)
}

/// `l(pi)(x, a, y) = -y * pi(a | x) / pi_ref(a | x) = -y * K * pi(a | x)`.
pub fn value_loss(pi: &dyn Policy, o: &Observation, k: ActionCount) -> Result<f64> {
    let reference = reference_policy_prob(o.action, &o.context, k)?;
    if pi.num_actions() != k {
        return Err(Error::domain(format!(
            "policy has {} actions, expected {}",
            pi.num_actions().get(),
            k.get()
        )));
    }
    Ok(-o.reward * pi.prob(o.action, &o.context) / reference)
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl ValueEstimate {
    /// Mean and standard error of the mean of `values`.
    pub fn from_samples(values: impl IntoIterator<Item = f64>) -> Self {
        // Welford
        let mut n = 0usize;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for v in values {
            n += 1;
            let delta = v - mean;
            mean += delta / n as f64;
            m2 += delta * (v - mean);
        }
        let std_error = if n > 1 {
            (m2 / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        ValueEstimate {
            mean,
            std_error,
            samples: n,
        }
    }

    pub fn negate(self) -> Self {
        ValueEstimate {
            mean: -self.mean,
            ..self
        }
    }
}

/// Expected reward of `pi` under `env`, averaging `sum_a pi(a|x) mu_a(x)` over
/// `m` sampled contexts.
pub fn policy_value(pi: &dyn Policy, env: &dyn Environment, m: usize, rng: &mut dyn RngCore) -> Result<ValueEstimate> {
    if m == 0 {
        return Err(Error::domain("policy_value needs at least one sample"));
    }
    let k = env.num_actions();
    if pi.num_actions() != k {
        return Err(Error::domain("policy and environment disagree on K"));
    }
    let mut probs = vec![0.0; k.get()];
    Ok(ValueEstimate::from_samples((0..m).map(|_| {
        let x = env.sample_context(rng);
        conditional_value(pi, env, &x, &mut probs)
    })))
}

/// `sum_a pi(a|x) mu_a(x)` at a single context.
pub fn conditional_value(pi: &dyn Policy, env: &dyn Environment, x: &Context, probs: &mut [f64]) -> f64 {
    pi.action_probs(x, probs);
    probs
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(a, &p)| p * env.true_mean(Action::new(a), x))
        .sum()
}

/// `R(pi) = -V(pi, env)`, computed from the same samples as [`policy_value`].
pub fn policy_risk(pi: &dyn Policy, env: &dyn Environment, m: usize, rng: &mut dyn RngCore) -> Result<ValueEstimate> {
    policy_value(pi, env, m, rng).map(ValueEstimate::negate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{LinearGaussianEnv, PiecewiseBernoulliEnv};
    use crate::rng::seeded;

    fn k(n: usize) -> ActionCount {
        ActionCount::new(n).unwrap()
    }

    fn ctx(v: &[f64]) -> Context {
        Context::new(v.to_vec()).unwrap()
    }

    #[test]
    fn reference_prob_is_uniform() {
        let x = ctx(&[0.3, -2.0, 1.0, 0.0]);
        assert_eq!(reference_policy_prob(Action::new(0), &x, k(2)).unwrap(), 0.5);
        assert_eq!(reference_policy_prob(Action::new(1), &x, k(2)).unwrap(), 0.5);
        assert_eq!(reference_policy_prob(Action::new(2), &x, k(4)).unwrap(), 0.25);
        assert!(matches!(
            reference_policy_prob(Action::new(2), &x, k(2)),
            Err(Error::ActionOutOfRange { .. })
        ));
    }

    #[test]
    fn value_loss_examples() {
        let x = ctx(&[1.0, 1.0, 0.0, 0.0]);
        let uniform = UniformPolicy { k: k(2) };
        let o = Observation::new(x.clone(), Action::new(1), 0.7).unwrap();
        assert_eq!(value_loss(&uniform, &o, k(2)).unwrap(), -0.7);

        let fixed = FixedArmPolicy {
            k: k(2),
            arm: Action::new(0),
        };
        let zero = Observation::new(x.clone(), Action::new(0), 0.0).unwrap();
        assert_eq!(value_loss(&fixed, &zero, k(2)).unwrap(), 0.0);

        let half = Observation::new(x.clone(), Action::new(0), 0.5).unwrap();
        assert_eq!(value_loss(&fixed, &half, k(2)).unwrap(), -1.0);

        let bad = Observation::new(x, Action::new(5), 1.0).unwrap();
        assert!(value_loss(&fixed, &bad, k(2)).is_err());
    }

    #[test]
    fn uniform_value_on_env1() {
        let env = PiecewiseBernoulliEnv::env1();
        let mut rng = seeded(11);
        let est = policy_value(&UniformPolicy { k: k(2) }, &env, 200_000, &mut rng).unwrap();
        // quadrant oracle: 0.25 * sum_q (mu_1 + mu_2)/2
        let oracle: f64 = (0..4)
            .map(|q| 0.25 * 0.5 * (env.table()[0][q] + env.table()[1][q]))
            .sum();
        assert!((oracle - 0.44375).abs() < 1e-15);
        assert!((est.mean - oracle).abs() < 4.0 * est.std_error, "{est:?}");
    }

    #[test]
    fn constant_mean_gives_constant_value() {
        let env = PiecewiseBernoulliEnv::new([[0.3; 4], [0.9; 4]], 4).unwrap();
        let pi = FixedArmPolicy {
            k: k(2),
            arm: Action::new(0),
        };
        let est = policy_value(&pi, &env, 1000, &mut seeded(1)).unwrap();
        assert_eq!(est.mean, 0.3);
        assert!(est.std_error.abs() < 1e-12);
    }

    #[test]
    fn risk_is_negated_value_on_same_samples() {
        let env = LinearGaussianEnv::env2();
        let pi = OraclePolicy { env: &env };
        let v = policy_value(&pi, &env, 5000, &mut seeded(3)).unwrap();
        let r = policy_risk(&pi, &env, 5000, &mut seeded(3)).unwrap();
        assert_eq!(r.mean, -v.mean);
        assert_eq!(r.std_error, v.std_error);
    }

    #[test]
    fn zero_environment_has_zero_risk() {
        let env = PiecewiseBernoulliEnv::new([[0.0; 4], [0.0; 4]], 4).unwrap();
        let r = policy_risk(&UniformPolicy { k: k(2) }, &env, 100, &mut seeded(0)).unwrap();
        assert_eq!(r.mean, 0.0);
    }

    #[test]
    fn optimal_policy_value_env1_is_unbiased() {
        let env = PiecewiseBernoulliEnv::env1();
        let pi = OraclePolicy { env: &env };
        let mut rng = seeded(99);
        // repeated m = 1e4 estimates; their mean must sit near the quadrant oracle
        let reps: Vec<f64> = (0..50)
            .map(|_| policy_value(&pi, &env, 10_000, &mut rng).unwrap().mean)
            .collect();
        let summary = ValueEstimate::from_samples(reps);
        assert!((summary.mean - 0.65).abs() < 4.0 * summary.std_error, "{summary:?}");
    }

    #[test]
    fn zero_samples_rejected() {
        let env = PiecewiseBernoulliEnv::env1();
        assert!(policy_value(&UniformPolicy { k: k(2) }, &env, 0, &mut seeded(0)).is_err());
    }

    #[test]
    fn sampling_consumes_one_uniform_and_respects_point_mass() {
        assert_eq!(sample_from_probs(&[0.0, 1.0], 0.0), Action::new(1));
        assert_eq!(sample_from_probs(&[1.0, 0.0], 0.999_999), Action::new(0));
        assert_eq!(sample_from_probs(&[0.5, 0.5], 0.5), Action::new(1));
        assert_eq!(sample_from_probs(&[0.3, 0.3, 0.3], 0.95), Action::new(2));
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax_lowest([1.0, 1.0, 0.5]), 0);
        assert_eq!(argmax_lowest([0.0, 2.0, 2.0]), 1);
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 2.0, 4.0, 7.0];
        let e = ValueEstimate::from_samples(xs);
        assert!((e.mean - 3.5).abs() < 1e-15);
        let var = xs.iter().map(|x| (x - 3.5f64).powi(2)).sum::<f64>() / 3.0;
        assert!((e.std_error - (var / 4.0).sqrt()).abs() < 1e-15);
    }
}
