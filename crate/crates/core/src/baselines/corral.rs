use rand::Rng;

use super::{check_horizon, sample_index};
use crate::{Error, Result};

const MAX_BISECTIONS: usize = 200;
const RESIDUAL_TOL: f64 = 1e-12;

/// Result of one Log-Barrier-OMD step.
#[derive(Debug, Clone, PartialEq)]
pub struct OmdStep {
    pub p: Vec<f64>,
    /// Normaliser `λ`, always within `[min loss, max loss]`.
    pub lambda: f64,
}

/// Log-barrier online mirror descent on the simplex.
///
/// Finds `λ ∈ [min ℓ, max ℓ]` with `Σ_j 1/(1/p_j + η_j(ℓ_j − λ)) = 1` by
/// bisection and returns `p'_j = 1/(1/p_j + η_j(ℓ_j − λ))`. The left-hand side
/// is increasing in `λ` wherever every denominator is positive, and a
/// non-positive denominator means `λ` overshot the root.
pub fn log_barrier_omd(p: &[f64], loss: &[f64], eta: &[f64]) -> Result<OmdStep> {
    if p.is_empty() || p.len() != loss.len() || p.len() != eta.len() {
        return Err(Error::Contract("p, loss and eta must have equal, non-zero length".into()));
    }
    if p.iter().any(|x| !(*x > 0.0)) || eta.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::Contract("p and eta must be strictly positive".into()));
    }
    if loss.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite loss".into()));
    }
    let total = |lambda: f64| -> f64 {
        let mut s = 0.0;
        for ((pj, lj), ej) in p.iter().zip(loss).zip(eta) {
            let denom = 1.0 / pj + ej * (lj - lambda);
            if denom <= 0.0 {
                return f64::INFINITY;
            }
            s += 1.0 / denom;
        }
        s
    };
    let mut lo = loss.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = loss.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut lambda = lo;
    let mut residual = total(lo) - 1.0;
    if residual.abs() > RESIDUAL_TOL {
        if residual > 0.0 || total(hi) - 1.0 < 0.0 {
            return Err(Error::Numeric(format!(
                "log-barrier root not bracketed in [{lo}, {hi}]"
            )));
        }
        for _ in 0..MAX_BISECTIONS {
            lambda = 0.5 * (lo + hi);
            residual = total(lambda) - 1.0;
            if residual.abs() <= RESIDUAL_TOL || lambda <= lo || lambda >= hi {
                break;
            }
            if residual < 0.0 {
                lo = lambda;
            } else {
                hi = lambda;
            }
        }
        if !residual.is_finite() || residual.abs() > 1e-10 {
            return Err(Error::Numeric(format!(
                "log-barrier bisection stalled at lambda = {lambda} (residual {residual})"
            )));
        }
    }
    let mut next: Vec<f64> = p
        .iter()
        .zip(loss)
        .zip(eta)
        .map(|((pj, lj), ej)| 1.0 / (1.0 / pj + ej * (lj - lambda)))
        .collect();
    let sum: f64 = next.iter().sum();
    next.iter_mut().for_each(|x| *x /= sum);
    Ok(OmdStep { p: next, lambda })
}

/// Corral with the stochastic wrapper: the chosen base learner sees the raw
/// reward, the master distribution is updated by Log-Barrier-OMD on the
/// importance-weighted vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CorralState {
    p: Vec<f64>,
    lower: Vec<f64>,
    eta: Vec<f64>,
    rho: Vec<f64>,
    gamma: f64,
    beta: f64,
    /// Feed `1 − r` instead of `r` into the importance-weighted vector.
    loss_flip: bool,
}

impl CorralState {
    pub fn new(learners: usize, horizon: usize, eta: f64, loss_flip: bool) -> Result<Self> {
        check_horizon(horizon)?;
        if learners == 0 {
            return Err(Error::config("base_learners", "at least one learner is required"));
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::config("eta", "must be finite and > 0"));
        }
        let m = learners as f64;
        // ln T is floored at 1 so that T < 3 keeps β finite
        let ln_t = (horizon as f64).ln().max(1.0);
        Ok(CorralState {
            p: vec![1.0 / m; learners],
            lower: vec![1.0 / (2.0 * m); learners],
            eta: vec![eta; learners],
            rho: vec![2.0 * m; learners],
            gamma: 1.0 / horizon as f64,
            beta: (1.0 / ln_t).exp(),
            loss_flip,
        })
    }

    pub fn distribution(&self) -> &[f64] {
        &self.p
    }

    pub fn lower_bounds(&self) -> &[f64] {
        &self.lower
    }

    pub fn learning_rates(&self) -> &[f64] {
        &self.eta
    }

    pub fn loss_ranges(&self) -> &[f64] {
        &self.rho
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.p, rng)
    }

    /// CORRAL-Update for the learner `i` sampled this round.
    pub fn update(&mut self, i: usize, reward: f64) -> Result<()> {
        let p_i = self.p[i];
        if !(p_i > 0.0) {
            return Err(Error::Contract(format!("learner {i} has zero probability")));
        }
        let observed = if self.loss_flip { 1.0 - reward } else { reward };
        let mut loss = vec![0.0; self.p.len()];
        loss[i] = observed / p_i;
        let step = log_barrier_omd(&self.p, &loss, &self.eta)?;
        let m = self.p.len() as f64;
        self.p = step
            .p
            .iter()
            .map(|x| (1.0 - self.gamma) * x + self.gamma / m)
            .collect();
        for j in 0..self.p.len() {
            if self.lower[j] > self.p[j] {
                self.lower[j] = self.p[j] / 2.0;
                self.eta[j] *= self.beta;
            }
            self.rho[j] = 1.0 / self.lower[j];
        }
        Ok(())
    }
}
