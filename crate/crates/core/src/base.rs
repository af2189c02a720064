//! Base learners: UCB for multi-armed environments and linear Thompson
//! sampling (optionally restricted to the first `d_i` coordinates) for linear
//! ones.
//!
//! A base learner's clock only advances on rounds where the meta-learner
//! chooses it; learners that are not chosen are never touched.

use std::hash::{Hash, Hasher};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::env::{Action, ActionView};
use crate::{Error, Result};

/// `μ̂ + c·√(ln(n/δ)/n)` for an arm pulled `n >= 1` times.
pub fn ucb_index(mean: f64, n: u64, c: f64, delta: f64) -> f64 {
    let n = n as f64;
    mean + c * ((n / delta).ln() / n).sqrt()
}

/// Index rule shared by base UCB and UCB-as-meta: unplayed arms first (lowest
/// index), then the largest UCB index, lowest index on ties.
pub fn ucb_select(counts: &[u64], sums: &[f64], c: f64, delta: f64) -> usize {
    if let Some(a) = counts.iter().position(|&n| n == 0) {
        return a;
    }
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (a, (&n, &s)) in counts.iter().zip(sums).enumerate() {
        let value = ucb_index(s / n as f64, n, c, delta);
        if value > best_value {
            best = a;
            best_value = value;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct UcbLearner {
    counts: Vec<u64>,
    sums: Vec<f64>,
    c: f64,
    delta: f64,
}

impl UcbLearner {
    pub fn new(arms: usize, c: f64, delta: f64) -> Result<Self> {
        if arms == 0 {
            return Err(Error::config("arms", "at least one arm is required"));
        }
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::config("c", "must be finite and >= 0"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::config("delta", "must lie in (0, 1)"));
        }
        Ok(UcbLearner {
            counts: vec![0; arms],
            sums: vec![0.0; arms],
            c,
            delta,
        })
    }

    pub fn select(&self) -> usize {
        ucb_select(&self.counts, &self.sums, self.c, self.delta)
    }

    pub fn update(&mut self, arm: usize, reward: f64) {
        self.counts[arm] += 1;
        self.sums[arm] += reward;
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    pub fn clock(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Ridge posterior of a linear Thompson sampling learner.
///
/// Holds the eigendecomposition `A = Q Λ Qᵀ` of the regularised Gram matrix so
/// that both `A⁻¹b` and the symmetric root `A^{-1/2}` come from one factorisation.
#[derive(Debug, Clone)]
pub struct Posterior {
    pub theta_hat: DVector<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl Posterior {
    /// Symmetric `S` with `S·S = A⁻¹`.
    pub fn inverse_sqrt(&self) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.eigenvectors.nrows(), self.eigenvectors.ncols(), |r, c| {
            self.eigenvectors[(r, c)] / self.eigenvalues[c].sqrt()
        });
        &scaled * self.eigenvectors.transpose()
    }

    /// `A^{-1/2}·v` without forming the root.
    pub fn apply_inverse_sqrt(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut coords = self.eigenvectors.tr_mul(v);
        for (x, l) in coords.iter_mut().zip(self.eigenvalues.iter()) {
            *x /= l.sqrt();
        }
        &self.eigenvectors * coords
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.min()
    }
}

/// Linear Thompson sampling with a ridge posterior, operating on the first
/// `dim` coordinates of the ambient action space.
#[derive(Debug, Clone)]
pub struct LinTsLearner {
    dim: usize,
    ambient: usize,
    lambda: f64,
    c: f64,
    gram: DMatrix<f64>,
    moment: DVector<f64>,
    clock: u64,
    rng: ChaCha8Rng,
}

impl LinTsLearner {
    pub fn new(dim: usize, ambient: usize, lambda: f64, c: f64, rng: ChaCha8Rng) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("dimension", "must be >= 1"));
        }
        if dim > ambient {
            return Err(Error::config(
                "dimension",
                format!("{dim} exceeds the ambient dimension {ambient}"),
            ));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::config("lambda", "must be finite and > 0"));
        }
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::config("c", "must be finite and >= 0"));
        }
        Ok(LinTsLearner {
            dim,
            ambient,
            lambda,
            c,
            gram: DMatrix::identity(dim, dim) * lambda,
            moment: DVector::zeros(dim),
            clock: 0,
            rng,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn moment(&self) -> &DVector<f64> {
        &self.moment
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn posterior(&self) -> Result<Posterior> {
        let eig = SymmetricEigen::new(self.gram.clone());
        if let Some(bad) = eig.eigenvalues.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::Numeric(format!(
                "Gram matrix is not positive definite (eigenvalue {bad})"
            )));
        }
        let mut coords = eig.eigenvectors.tr_mul(&self.moment);
        for (x, l) in coords.iter_mut().zip(eig.eigenvalues.iter()) {
            *x /= l;
        }
        Ok(Posterior {
            theta_hat: &eig.eigenvectors * coords,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }

    /// `θ̃ = θ̂ + c·√d·A^{-1/2}·noise`.
    pub fn sample_model(&self, noise: &DVector<f64>) -> Result<DVector<f64>> {
        if noise.len() != self.dim {
            return Err(Error::Contract(format!(
                "noise has dimension {}, learner operates in {}",
                noise.len(),
                self.dim
            )));
        }
        let post = self.posterior()?;
        if self.c == 0.0 {
            return Ok(post.theta_hat);
        }
        let scale = self.c * (self.dim as f64).sqrt();
        Ok(&post.theta_hat + post.apply_inverse_sqrt(noise) * scale)
    }

    /// Chooses an action with a fresh perturbation from the learner's own stream.
    pub fn act(&mut self, actions: ActionView<'_>) -> Result<Action> {
        let noise = DVector::from_fn(self.dim, |_, _| self.rng.sample::<f64, _>(StandardNormal));
        self.act_with_noise(actions, &noise)
    }

    /// Deterministic given `noise`: maximises `⟨P[a], θ̃⟩` over the action set
    /// and plays the full ambient-dimension action.
    ///
    /// For the sphere and hypercube the maximiser over the projected set is
    /// lifted back: sphere actions are zero beyond `dim`, hypercube actions
    /// take `+scale` there (the `sign(0) = +1` convention).
    pub fn act_with_noise(&self, actions: ActionView<'_>, noise: &DVector<f64>) -> Result<Action> {
        let theta = self.sample_model(noise)?;
        let action = match actions {
            ActionView::UnitSphere { dim } => {
                self.check_ambient(dim)?;
                let mut a = DVector::zeros(dim);
                let norm = theta.norm();
                if norm > 0.0 {
                    a.rows_mut(0, self.dim).copy_from(&(&theta / norm));
                } else {
                    a[0] = 1.0;
                }
                a
            }
            ActionView::Hypercube { dim, scale } => {
                self.check_ambient(dim)?;
                DVector::from_fn(dim, |j, _| {
                    if j < self.dim && theta[j] < 0.0 {
                        -scale
                    } else {
                        scale
                    }
                })
            }
            ActionView::Finite(set) => {
                let mut best: Option<(usize, f64)> = None;
                for (k, a) in set.iter().enumerate() {
                    self.check_ambient(a.len())?;
                    let score = a.rows(0, self.dim).dot(&theta);
                    if best.is_none_or(|(_, s)| score > s) {
                        best = Some((k, score));
                    }
                }
                let (k, _) = best.ok_or_else(|| Error::Contract("empty action set".into()))?;
                set[k].clone()
            }
            ActionView::Arms(_) => {
                return Err(Error::Contract(
                    "linear Thompson sampling needs a linear action set".into(),
                ))
            }
        };
        Ok(Action::Vector(action))
    }

    fn check_ambient(&self, dim: usize) -> Result<()> {
        if dim == self.ambient {
            Ok(())
        } else {
            Err(Error::Contract(format!(
                "action dimension {dim} does not match ambient dimension {}",
                self.ambient
            )))
        }
    }

    /// Rank-one update with the projection of the played action.
    pub fn update(&mut self, features: &DVector<f64>, reward: f64) -> Result<()> {
        self.check_ambient(features.len())?;
        let x = features.rows(0, self.dim);
        self.gram.ger(1.0, &x, &x, 1.0);
        self.moment.axpy(reward, &x, 1.0);
        self.clock += 1;
        Ok(())
    }
}

/// A base learner of either family.
#[derive(Debug, Clone)]
pub enum BaseLearner {
    Ucb(UcbLearner),
    LinTs(LinTsLearner),
}

impl BaseLearner {
    pub fn act(&mut self, actions: ActionView<'_>) -> Result<Action> {
        match self {
            BaseLearner::Ucb(ucb) => match actions {
                ActionView::Arms(k) if k == ucb.counts.len() => Ok(Action::Arm(ucb.select())),
                _ => Err(Error::Contract(
                    "UCB needs the multi-armed action set it was built for".into(),
                )),
            },
            BaseLearner::LinTs(ts) => ts.act(actions),
        }
    }

    pub fn update(&mut self, action: &Action, reward: f64) -> Result<()> {
        match (self, action) {
            (BaseLearner::Ucb(ucb), Action::Arm(a)) if *a < ucb.counts.len() => {
                ucb.update(*a, reward);
                Ok(())
            }
            (BaseLearner::LinTs(ts), Action::Vector(v)) => ts.update(v, reward),
            _ => Err(Error::Contract(
                "action does not belong to this learner's action space".into(),
            )),
        }
    }

    pub fn clock(&self) -> u64 {
        match self {
            BaseLearner::Ucb(u) => u.clock(),
            BaseLearner::LinTs(t) => t.clock(),
        }
    }

    /// Hash of the full learner state, random stream included.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        match self {
            BaseLearner::Ucb(u) => {
                u.counts.hash(&mut h);
                u.sums.iter().for_each(|x| x.to_bits().hash(&mut h));
            }
            BaseLearner::LinTs(t) => {
                t.clock.hash(&mut h);
                t.gram.iter().for_each(|x| x.to_bits().hash(&mut h));
                t.moment.iter().for_each(|x| x.to_bits().hash(&mut h));
                t.rng.get_word_pos().hash(&mut h);
            }
        }
        h.finish()
    }
}
