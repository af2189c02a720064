//! Data-driven regret balancing.
//!
//! Both variants keep, per base learner, the play count `n`, the reward sum
//! `û`, a regret coefficient estimate `d̂` and a balancing potential `φ`. Each
//! round the learner with the smallest potential is played; only its
//! statistics change afterwards.
//!
//! - [`Variant::D3rb`] doubles `d̂` when the misspecification test fires and
//!   sets `φ = d̂·√n`.
//! - [`Variant::Ed2rb`] estimates `d̂` directly from the reward gap to the best
//!   lower confidence bound and clips `d̂·√n` into `[φ, 2φ]`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Concentration width `c·√(L(n)/n)` with `L(n) = ln(M·max(ln n, 1)/δ)`.
///
/// The `max(ln n, 1)` guard keeps the width finite at `n = 1`.
///
/// # Panics
///
/// If `n == 0`; callers only evaluate widths of learners that have been played.
pub fn conc_width(n: u64, learners: usize, delta: f64, c: f64) -> f64 {
    assert!(n >= 1, "concentration width is undefined for an unplayed learner");
    let n = n as f64;
    c * (log_term(n, learners, delta) / n).sqrt()
}

/// `L(n) = ln(M·max(ln n, 1)/δ)`.
pub fn log_term(n: f64, learners: usize, delta: f64) -> f64 {
    (learners as f64 * n.ln().max(1.0) / delta).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    D3rb,
    Ed2rb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalancingParams {
    pub d_min: f64,
    pub delta: f64,
    /// Concentration constant `c`.
    pub c: f64,
}

impl Default for BalancingParams {
    fn default() -> Self {
        BalancingParams {
            d_min: 1.0,
            delta: 0.05,
            c: 1.0,
        }
    }
}

impl BalancingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_min.is_finite() && self.d_min > 0.0) {
            return Err(Error::config("d_min", "must be finite and > 0"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config("delta", "must lie in (0, 1)"));
        }
        if !(self.c.is_finite() && self.c >= 0.0) {
            return Err(Error::config("c", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// What happened to the chosen learner in one balancing update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalancingStep {
    pub learner: usize,
    pub phi_before: f64,
    pub phi_after: f64,
    pub d_hat_before: f64,
    pub d_hat_after: f64,
    /// D³RB: the misspecification test fired. ED²RB: always false.
    pub test_triggered: bool,
}

impl BalancingStep {
    pub fn doubled(&self) -> bool {
        self.phi_after >= 2.0 * self.phi_before
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalancingState {
    variant: Variant,
    params: BalancingParams,
    counts: Vec<u64>,
    sums: Vec<f64>,
    d_hat: Vec<f64>,
    phi: Vec<f64>,
    round: u64,
}

impl BalancingState {
    pub fn new(variant: Variant, learners: usize, params: BalancingParams) -> Result<Self> {
        if learners == 0 {
            return Err(Error::config("base_learners", "at least one learner is required"));
        }
        params.validate()?;
        Ok(BalancingState {
            variant,
            params,
            counts: vec![0; learners],
            sums: vec![0.0; learners],
            d_hat: vec![params.d_min; learners],
            phi: vec![params.d_min; learners],
            round: 0,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn params(&self) -> &BalancingParams {
        &self.params
    }

    pub fn learners(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    pub fn d_hat(&self) -> &[f64] {
        &self.d_hat
    }

    pub fn potentials(&self) -> &[f64] {
        &self.phi
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// Learner with the smallest potential, lowest index on ties.
    pub fn select(&self) -> usize {
        argmin(&self.phi)
    }

    fn width(&self, i: usize) -> f64 {
        conc_width(self.counts[i], self.learners(), self.params.delta, self.params.c)
    }

    fn mean(&self, i: usize) -> f64 {
        self.sums[i] / self.counts[i] as f64
    }

    /// `max_j û^j/n^j − width(n^j)` over learners played at least once.
    pub fn best_lower_bound(&self) -> Option<f64> {
        (0..self.learners())
            .filter(|&j| self.counts[j] > 0)
            .map(|j| self.mean(j) - self.width(j))
            .reduce(f64::max)
    }

    /// D³RB misspecification test for learner `i` on the current statistics.
    pub fn misspecification_test(&self, i: usize) -> bool {
        let n = self.counts[i];
        if n == 0 {
            return false;
        }
        let Some(best) = self.best_lower_bound() else {
            return false;
        };
        let nf = n as f64;
        let upper = self.mean(i) + self.d_hat[i] * nf.sqrt() / nf + self.width(i);
        upper < best
    }

    /// ED²RB estimate `max{d_min, √n·(best lower bound − û/n − width(n))}`.
    pub fn estimate(&self, i: usize) -> f64 {
        let n = self.counts[i];
        let d_min = self.params.d_min;
        if n == 0 {
            return d_min;
        }
        let Some(best) = self.best_lower_bound() else {
            return d_min;
        };
        let gap = best - self.mean(i) - self.width(i);
        d_min.max((n as f64).sqrt() * gap)
    }

    /// Routes this round's reward to learner `i` and updates its coefficient
    /// and potential; every other learner is left untouched.
    pub fn update(&mut self, i: usize, reward: f64) -> BalancingStep {
        self.round += 1;
        self.counts[i] += 1;
        self.sums[i] += reward;
        let phi_before = self.phi[i];
        let d_hat_before = self.d_hat[i];
        let root_n = (self.counts[i] as f64).sqrt();
        let mut test_triggered = false;
        match self.variant {
            Variant::D3rb => {
                test_triggered = self.misspecification_test(i);
                if test_triggered {
                    self.d_hat[i] *= 2.0;
                }
                self.phi[i] = self.d_hat[i] * root_n;
            }
            Variant::Ed2rb => {
                self.d_hat[i] = self.estimate(i);
                self.phi[i] = clip(self.d_hat[i] * root_n, phi_before, 2.0 * phi_before);
            }
        }
        BalancingStep {
            learner: i,
            phi_before,
            phi_after: self.phi[i],
            d_hat_before,
            d_hat_after: self.d_hat[i],
            test_triggered,
        }
    }
}

pub fn clip(x: f64, lo: f64, hi: f64) -> f64 {
    x.max(lo).min(hi)
}

pub(crate) fn argmin(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate().skip(1) {
        if *x < xs[best] {
            best = i;
        }
    }
    best
}

/// A broken balance invariant, located by round and learner.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub round: u64,
    pub learner: usize,
    pub what: String,
}

/// Tracks the potential invariants of a balancing run round by round:
/// pairwise balance (factor 3 for D³RB, 2 for ED²RB), monotone potentials,
/// D³RB per-step growth of at most 3, and the ED²RB bound
/// `#doublings ≤ log₂(t·max{1, 1/d_min})`.
#[derive(Debug, Clone)]
pub struct BalanceAudit {
    doublings: Vec<u32>,
    violations: Vec<Violation>,
}

impl BalanceAudit {
    pub fn new(learners: usize) -> Self {
        BalanceAudit {
            doublings: vec![0; learners],
            violations: Vec::new(),
        }
    }

    pub fn observe(&mut self, state: &BalancingState, step: &BalancingStep) {
        let t = state.round();
        let i = step.learner;
        let mut flag = |what: String| {
            self.violations.push(Violation {
                round: t,
                learner: i,
                what,
            })
        };
        if step.phi_after < step.phi_before {
            flag(format!("potential decreased {} -> {}", step.phi_before, step.phi_after));
        }
        let factor = match state.variant() {
            Variant::D3rb => 3.0,
            Variant::Ed2rb => 2.0,
        };
        if step.phi_after > factor * step.phi_before {
            flag(format!(
                "potential grew by more than {factor}: {} -> {}",
                step.phi_before, step.phi_after
            ));
        }
        let phi = state.potentials();
        let hi = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = phi.iter().copied().fold(f64::INFINITY, f64::min);
        if hi > factor * lo {
            flag(format!("potentials out of balance: max {hi} > {factor} x min {lo}"));
        }
        if state.variant() == Variant::Ed2rb {
            if step.doubled() {
                self.doublings[i] += 1;
            }
            let d_min = state.params().d_min;
            let bound = (t as f64 * (1.0f64).max(1.0 / d_min)).log2();
            if f64::from(self.doublings[i]) > bound {
                let n = self.doublings[i];
                self.violations.push(Violation {
                    round: t,
                    learner: i,
                    what: format!("{n} doublings exceed log2 bound {bound:.4}"),
                });
            }
        }
    }

    pub fn doublings(&self) -> &[u32] {
        &self.doublings
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(delta: f64) -> BalancingParams {
        BalancingParams {
            d_min: 1.0,
            delta,
            c: 1.0,
        }
    }

    /// Two learners with the given statistics; learner 0 is the one under test.
    fn two_learners(variant: Variant, n: u64, u_i: f64, u_j: f64) -> BalancingState {
        let mut s = BalancingState::new(variant, 2, params(0.1)).unwrap();
        s.counts = vec![n, n];
        s.sums = vec![u_i, u_j];
        s
    }

    #[test]
    fn width_values() {
        assert_abs_diff_eq!(conc_width(100, 2, 0.1, 1.0), 0.212_67, epsilon = 1e-5);
        assert_abs_diff_eq!(conc_width(10_000, 2, 0.1, 1.0), 0.022_84, epsilon = 1e-5);
        assert_eq!(conc_width(37, 4, 0.1, 0.0), 0.0);
        // guarded log keeps n = 1 finite and positive
        let w1 = conc_width(1, 2, 0.1, 1.0);
        assert!(w1.is_finite() && w1 > 0.0);
    }

    #[test]
    fn width_decreases_from_three_on() {
        let mut prev = conc_width(3, 5, 0.05, 1.0);
        for n in 4..5000 {
            let w = conc_width(n, 5, 0.05, 1.0);
            assert!(w < prev);
            prev = w;
        }
    }

    #[test]
    #[should_panic]
    fn width_of_unplayed_learner_panics() {
        conc_width(0, 2, 0.1, 1.0);
    }

    #[test]
    fn select_takes_argmin_with_low_index_ties() {
        let mut s = BalancingState::new(Variant::D3rb, 3, params(0.1)).unwrap();
        assert_eq!(s.select(), 0);
        s.phi = vec![3.0, 2.5, 2.5];
        assert_eq!(s.select(), 1);
        s.phi = vec![1.0, 2.0];
        s.counts.truncate(2);
        s.phi[0] = 2.5;
        assert_eq!(s.select(), 1);
    }

    #[test]
    fn misspecification_test_fires() {
        let s = two_learners(Variant::D3rb, 10_000, 3000.0, 9000.0);
        let lhs = 0.3 + 0.01 + conc_width(10_000, 2, 0.1, 1.0);
        assert_abs_diff_eq!(lhs, 0.332_84, epsilon = 1e-5);
        assert_abs_diff_eq!(s.best_lower_bound().unwrap(), 0.877_16, epsilon = 1e-5);
        assert!(s.misspecification_test(0));
    }

    #[test]
    fn misspecification_test_holds() {
        let s = two_learners(Variant::D3rb, 100, 50.0, 90.0);
        assert_abs_diff_eq!(s.best_lower_bound().unwrap(), 0.687_33, epsilon = 1e-5);
        assert!(!s.misspecification_test(0));
    }

    #[test]
    fn single_learner_never_fails_its_own_test() {
        let mut s = BalancingState::new(Variant::D3rb, 1, params(0.1)).unwrap();
        let mut g = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            assert_eq!(s.select(), 0);
            let step = s.update(0, g.random::<f64>() * 10.0 - 5.0);
            assert!(!step.test_triggered);
        }
        assert_eq!(s.d_hat()[0], 1.0);
    }

    #[test]
    fn doubling_update_on_triggered_test() {
        let mut s = two_learners(Variant::D3rb, 9_999, 3000.0 - 0.3, 9000.0);
        s.counts[1] = 10_000;
        // the incoming reward brings learner 0 to n = 10000, û = 3000
        let step = s.update(0, 0.3);
        assert!(step.test_triggered);
        assert_eq!(s.d_hat()[0], 2.0);
        assert_abs_diff_eq!(s.potentials()[0], 200.0, epsilon = 1e-9);
    }

    #[test]
    fn first_play_sets_potential_to_d_min() {
        let mut s = BalancingState::new(Variant::D3rb, 3, params(0.05)).unwrap();
        let step = s.update(0, 0.4);
        assert!(!step.test_triggered);
        assert_eq!(s.potentials()[0], 1.0);
    }

    #[test]
    fn update_is_local() {
        for variant in [Variant::D3rb, Variant::Ed2rb] {
            let mut s = BalancingState::new(variant, 3, params(0.05)).unwrap();
            s.update(0, 1.0);
            s.update(1, 0.0);
            let before = (s.counts[2], s.sums[2], s.d_hat[2], s.phi[2], s.counts[0], s.phi[0]);
            s.update(1, -3.0);
            let after = (s.counts[2], s.sums[2], s.d_hat[2], s.phi[2], s.counts[0], s.phi[0]);
            assert_eq!(before, after);
        }
    }

    #[test]
    fn direct_estimate() {
        let s = two_learners(Variant::Ed2rb, 10_000, 3000.0, 9000.0);
        assert_abs_diff_eq!(s.estimate(0), 55.432, epsilon = 1e-3);
        // the best learner is floored at d_min
        assert_eq!(s.estimate(1), 1.0);
        let mut one = BalancingState::new(Variant::Ed2rb, 1, params(0.1)).unwrap();
        one.counts = vec![50];
        one.sums = vec![-20.0];
        assert_eq!(one.estimate(0), 1.0);
    }

    #[test]
    fn clipped_potential() {
        assert_eq!(clip(5543.2, 100.0, 200.0), 200.0);
        assert_eq!(clip(130.0, 100.0, 200.0), 130.0);
        assert_eq!(clip(50.0, 100.0, 200.0), 100.0);

        let mut s = two_learners(Variant::Ed2rb, 9_999, 3000.0 - 0.3, 9000.0);
        s.counts[1] = 10_000;
        s.phi[0] = 100.0;
        let step = s.update(0, 0.3);
        assert_abs_diff_eq!(step.d_hat_after, 55.432, epsilon = 1e-3);
        assert_eq!(step.phi_after, 200.0);
        assert!(step.doubled());
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let bad = BalancingParams {
            d_min: 1.0,
            delta: 1.5,
            c: 1.0,
        };
        assert!(matches!(
            BalancingState::new(Variant::D3rb, 2, bad),
            Err(Error::Config { ref path, .. }) if path == "delta"
        ));
        assert!(BalancingState::new(Variant::D3rb, 0, params(0.1)).is_err());
    }

    fn simulate(variant: Variant, means: &[f64], scale: f64, rounds: usize, seed: u64) -> BalanceAudit {
        let mut s = BalancingState::new(variant, means.len(), params(0.05)).unwrap();
        let mut audit = BalanceAudit::new(means.len());
        let mut g = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..rounds {
            let i = s.select();
            let r = if g.random::<f64>() < means[i] { scale } else { 0.0 };
            let step = s.update(i, r);
            audit.observe(&s, &step);
        }
        audit
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn balance_invariants_hold_on_bounded_rewards(
            seed in any::<u64>(),
            means in proptest::collection::vec(0.0f64..=1.0, 1..6),
        ) {
            for variant in [Variant::D3rb, Variant::Ed2rb] {
                let audit = simulate(variant, &means, 1.0, 2000, seed);
                prop_assert!(audit.violations().is_empty(), "{:?}", audit.violations());
            }
        }

        #[test]
        fn selection_is_scale_invariant(
            phi in proptest::collection::vec(0.1f64..100.0, 1..8),
            k in 0.01f64..100.0,
        ) {
            let scaled: Vec<f64> = phi.iter().map(|p| p * k).collect();
            prop_assert_eq!(argmin(&phi), argmin(&scaled));
        }

        #[test]
        fn d3rb_coefficients_stay_on_the_doubling_grid(seed in any::<u64>()) {
            let means = [0.2, 0.5, 0.9];
            let mut s = BalancingState::new(Variant::D3rb, 3, BalancingParams { d_min: 1.5, delta: 0.05, c: 1.0 }).unwrap();
            let mut g = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..3000 {
                let i = s.select();
                let r = if g.random::<f64>() < means[i] { 1.0 } else { 0.0 };
                s.update(i, r);
                for d in s.d_hat() {
                    let m = (d / 1.5).log2();
                    prop_assert!(*d >= 1.5 && (m - m.round()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn heavy_rewards_still_keep_pairwise_balance() {
        for seed in 0..20 {
            for variant in [Variant::D3rb, Variant::Ed2rb] {
                let audit = simulate(variant, &[0.1, 0.2, 0.5], 30.0, 3000, seed);
                let balance: Vec<_> = audit
                    .violations()
                    .iter()
                    .filter(|v| !v.what.contains("doublings"))
                    .collect();
                assert!(balance.is_empty(), "{balance:?}");
            }
        }
    }
}
