use rand::Rng;

use super::{check_horizon, sample_index};
use crate::{Error, Result};

/// EXP3 over base learners with importance-weighted cumulative rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct Exp3State {
    cumulative: Vec<f64>,
    p: Vec<f64>,
    eta: f64,
    gamma: f64,
}

impl Exp3State {
    /// Default rates: `η = √(ln M / (M T))`, `γ = 0.1/√T`.
    pub fn default_rates(learners: usize, horizon: usize) -> (f64, f64) {
        let m = learners as f64;
        let t = horizon as f64;
        ((m.ln() / (m * t)).sqrt(), 0.1 / t.sqrt())
    }

    pub fn new(learners: usize, horizon: usize, eta: Option<f64>, gamma: Option<f64>) -> Result<Self> {
        check_horizon(horizon)?;
        if learners == 0 {
            return Err(Error::config("base_learners", "at least one learner is required"));
        }
        let (eta0, gamma0) = Self::default_rates(learners, horizon);
        let eta = eta.unwrap_or(eta0);
        let gamma = gamma.unwrap_or(gamma0);
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::config("eta", "must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::config("gamma", "must lie in [0, 1]"));
        }
        let mut state = Exp3State {
            cumulative: vec![0.0; learners],
            p: Vec::new(),
            eta,
            gamma,
        };
        state.p = state.compute_distribution();
        Ok(state)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn distribution(&self) -> &[f64] {
        &self.p
    }

    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.p, rng)
    }

    pub fn update(&mut self, i: usize, reward: f64) -> Result<()> {
        let p_i = self.p[i];
        if !(p_i > 0.0) {
            return Err(Error::Contract(format!("learner {i} has zero probability")));
        }
        self.cumulative[i] += reward / p_i;
        self.p = self.compute_distribution();
        if self.p.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("EXP3 distribution is not finite".into()));
        }
        Ok(())
    }

    fn compute_distribution(&self) -> Vec<f64> {
        softmax_mix(&self.cumulative, self.eta, self.gamma)
    }
}

fn softmax_mix(r: &[f64], eta: f64, gamma: f64) -> Vec<f64> {
    let m = r.len() as f64;
    let top = r.iter().map(|x| eta * x).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = r.iter().map(|x| (eta * x - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights
        .iter()
        .map(|w| (1.0 - gamma) * w / total + gamma / m)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_rates() {
        let (eta, gamma) = Exp3State::default_rates(10, 20_000);
        assert_abs_diff_eq!(eta, (10f64.ln() / 200_000.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(gamma, 0.1 / 20_000f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn starts_uniform() {
        let s = Exp3State::new(4, 100, None, None).unwrap();
        assert_eq!(s.distribution(), &[0.25; 4]);
    }

    #[test]
    fn importance_weighted_update() {
        let mut s = Exp3State::new(2, 100, Some(0.5), Some(0.0)).unwrap();
        s.update(0, 1.0).unwrap();
        assert_eq!(s.cumulative(), &[2.0, 0.0]);
        let e = 1f64.exp();
        assert_abs_diff_eq!(s.distribution()[0], e / (e + 1.0), epsilon = 1e-15);
    }

    #[test]
    fn huge_rewards_do_not_overflow() {
        let mut s = Exp3State::new(3, 100, Some(1.0), Some(0.03)).unwrap();
        s.update(1, 1e6).unwrap();
        let p = s.distribution();
        assert!(p.iter().all(|x| x.is_finite()));
        assert_abs_diff_eq!(p[1], 0.97 + 0.01, epsilon = 1e-12);
        assert_abs_diff_eq!(p[0], 0.01, epsilon = 1e-12);
    }

    #[test]
    fn single_learner() {
        let mut s = Exp3State::new(1, 10, None, None).unwrap();
        assert_eq!(s.eta(), 0.0);
        s.update(0, 3.0).unwrap();
        assert_eq!(s.distribution(), &[1.0]);
    }

    #[test]
    fn rejects_bad_gamma() {
        assert!(Exp3State::new(2, 10, None, Some(1.5)).is_err());
    }

    proptest! {
        #[test]
        fn shift_invariance(
            r in proptest::collection::vec(-50f64..50.0, 1..8),
            shift in -1e3f64..1e3,
            eta in 0f64..2.0,
            gamma in 0f64..1.0,
        ) {
            let a = softmax_mix(&r, eta, gamma);
            let shifted: Vec<f64> = r.iter().map(|x| x + shift).collect();
            let b = softmax_mix(&shifted, eta, gamma);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
        }

        #[test]
        fn distribution_is_mixed_simplex(seed in any::<u64>(), m in 1usize..8) {
            let horizon = 400;
            let mut s = Exp3State::new(m, horizon, None, None).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..horizon {
                let i = s.select(&mut rng);
                s.update(i, rng.random::<f64>()).unwrap();
                let p = s.distribution();
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                prop_assert!(p.iter().all(|x| *x >= s.gamma() / m as f64 * (1.0 - 1e-12)));
            }
        }
    }
}
