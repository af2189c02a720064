//! Stochastic reward environments.
//!
//! Every environment knows its true parameters, so besides sampling rewards it
//! reports the exact instantaneous pseudo-regret `v⋆ − v^π` of the played
//! action. Regret is never estimated from samples.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

fn one() -> f64 {
    1.0
}

/// Declarative description of a reward-generating process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    /// Arms with Gaussian rewards `N(mean, reward_std²)`.
    GaussianMab {
        means: Vec<f64>,
        #[serde(default = "one")]
        reward_std: f64,
    },
    /// Arms with rewards `reward_scale · Bernoulli(mean)`.
    BernoulliMab {
        means: Vec<f64>,
        #[serde(default = "one")]
        reward_scale: f64,
    },
    /// Fixed continuous action set, reward `⟨a, θ⋆⟩ + noise_std · N(0, 1)`.
    LinearBandit {
        theta_star: Vec<f64>,
        action_set: ActionSet,
        #[serde(default = "one")]
        noise_std: f64,
    },
    /// Each round offers `context_size` actions drawn uniformly from the unit sphere.
    ContextualLinearBandit {
        theta_star: Vec<f64>,
        context_size: usize,
        #[serde(default = "one")]
        noise_std: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActionSet {
    UnitSphere,
    /// Vertices `{−scale, +scale}^d`.
    Hypercube { scale: f64 },
}

impl EnvironmentSpec {
    /// Checks the spec invariants; errors carry a field path relative to the spec.
    pub fn validate(&self) -> Result<()> {
        match self {
            EnvironmentSpec::GaussianMab { means, reward_std } => {
                check_means(means, false)?;
                if !(reward_std.is_finite() && *reward_std >= 0.0) {
                    return Err(Error::config("reward_std", "must be finite and >= 0"));
                }
            }
            EnvironmentSpec::BernoulliMab {
                means,
                reward_scale,
            } => {
                check_means(means, true)?;
                if !(reward_scale.is_finite() && *reward_scale > 0.0) {
                    return Err(Error::config("reward_scale", "must be finite and > 0"));
                }
            }
            EnvironmentSpec::LinearBandit {
                theta_star,
                action_set,
                noise_std,
            } => {
                check_theta(theta_star)?;
                check_noise(*noise_std)?;
                if let ActionSet::Hypercube { scale } = action_set {
                    if !(scale.is_finite() && *scale > 0.0) {
                        return Err(Error::config("action_set.scale", "must be finite and > 0"));
                    }
                }
            }
            EnvironmentSpec::ContextualLinearBandit {
                theta_star,
                context_size,
                noise_std,
            } => {
                check_theta(theta_star)?;
                check_noise(*noise_std)?;
                if *context_size == 0 {
                    return Err(Error::config("context_size", "must be >= 1"));
                }
            }
        }
        Ok(())
    }

    pub fn is_linear(&self) -> bool {
        matches!(
            self,
            EnvironmentSpec::LinearBandit { .. } | EnvironmentSpec::ContextualLinearBandit { .. }
        )
    }

    pub fn is_contextual(&self) -> bool {
        matches!(self, EnvironmentSpec::ContextualLinearBandit { .. })
    }

    /// Number of arms for multi-armed environments, ambient dimension for linear ones.
    pub fn width(&self) -> usize {
        match self {
            EnvironmentSpec::GaussianMab { means, .. }
            | EnvironmentSpec::BernoulliMab { means, .. } => means.len(),
            EnvironmentSpec::LinearBandit { theta_star, .. }
            | EnvironmentSpec::ContextualLinearBandit { theta_star, .. } => theta_star.len(),
        }
    }
}

fn check_means(means: &[f64], unit_interval: bool) -> Result<()> {
    if means.is_empty() {
        return Err(Error::config("means", "at least one arm is required"));
    }
    for (i, m) in means.iter().enumerate() {
        if !m.is_finite() || (unit_interval && !(0.0..=1.0).contains(m)) {
            let want = if unit_interval { "in [0, 1]" } else { "finite" };
            return Err(Error::config(format!("means[{i}]"), format!("{m} is not {want}")));
        }
    }
    Ok(())
}

fn check_theta(theta: &[f64]) -> Result<()> {
    if theta.is_empty() {
        return Err(Error::config("theta_star", "dimension must be >= 1"));
    }
    if let Some(i) = theta.iter().position(|x| !x.is_finite()) {
        return Err(Error::config(format!("theta_star[{i}]"), "must be finite"));
    }
    Ok(())
}

fn check_noise(noise_std: f64) -> Result<()> {
    if noise_std.is_finite() && noise_std >= 0.0 {
        Ok(())
    } else {
        Err(Error::config("noise_std", "must be finite and >= 0"))
    }
}

/// An action handed to the environment.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Arm(usize),
    /// A point of the linear action set, in the ambient dimension.
    Vector(DVector<f64>),
}

/// The actions available in the current round, as seen by a base learner.
#[derive(Debug, Clone, Copy)]
pub enum ActionView<'a> {
    Arms(usize),
    UnitSphere { dim: usize },
    Hypercube { dim: usize, scale: f64 },
    Finite(&'a [DVector<f64>]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub reward: f64,
    /// `v⋆ − v^π` from the true parameters; always `>= 0`.
    pub inst_regret: f64,
    /// Expected reward `v^π` of the played action.
    pub value: f64,
    /// Position of the played action in this round's sampled context.
    pub context_index: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Environment {
    spec: EnvironmentSpec,
    theta: DVector<f64>,
    rng: ChaCha8Rng,
    /// Best expected reward over the fixed action set (unused for contextual).
    best_value: f64,
    context: Vec<DVector<f64>>,
    context_values: Vec<f64>,
    context_pending: bool,
}

impl Environment {
    /// Seeds the environment stream from a plain integer.
    pub fn new(spec: EnvironmentSpec, seed: u64) -> Result<Self> {
        Self::with_rng(spec, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng(spec: EnvironmentSpec, rng: ChaCha8Rng) -> Result<Self> {
        spec.validate()
            .map_err(|e| prefix_config_error(e, "environment"))?;
        let (theta, best_value) = match &spec {
            EnvironmentSpec::GaussianMab { means, .. } => (DVector::zeros(0), max_of(means)),
            EnvironmentSpec::BernoulliMab {
                means,
                reward_scale,
            } => (DVector::zeros(0), reward_scale * max_of(means)),
            EnvironmentSpec::LinearBandit {
                theta_star,
                action_set,
                ..
            } => {
                let theta = DVector::from_column_slice(theta_star);
                let best = match action_set {
                    ActionSet::UnitSphere => theta.norm(),
                    ActionSet::Hypercube { scale } => scale * theta.iter().map(|x| x.abs()).sum::<f64>(),
                };
                (theta, best)
            }
            EnvironmentSpec::ContextualLinearBandit { theta_star, .. } => {
                (DVector::from_column_slice(theta_star), f64::NAN)
            }
        };
        Ok(Environment {
            spec,
            theta,
            rng,
            best_value,
            context: Vec::new(),
            context_values: Vec::new(),
            context_pending: false,
        })
    }

    pub fn spec(&self) -> &EnvironmentSpec {
        &self.spec
    }

    /// Draws this round's context (contextual environments only).
    pub fn sample_context(&mut self) -> Result<&[DVector<f64>]> {
        let EnvironmentSpec::ContextualLinearBandit { context_size, .. } = self.spec else {
            return Err(Error::Contract(
                "sample_context called on a non-contextual environment".into(),
            ));
        };
        let dim = self.theta.len();
        self.context.clear();
        self.context_values.clear();
        for _ in 0..context_size {
            let v = uniform_sphere(&mut self.rng, dim);
            self.context_values.push(v.dot(&self.theta));
            self.context.push(v);
        }
        self.context_pending = true;
        Ok(&self.context)
    }

    /// The action set of the current round.
    pub fn actions(&self) -> ActionView<'_> {
        match &self.spec {
            EnvironmentSpec::GaussianMab { means, .. }
            | EnvironmentSpec::BernoulliMab { means, .. } => ActionView::Arms(means.len()),
            EnvironmentSpec::LinearBandit { action_set, .. } => match *action_set {
                ActionSet::UnitSphere => ActionView::UnitSphere {
                    dim: self.theta.len(),
                },
                ActionSet::Hypercube { scale } => ActionView::Hypercube {
                    dim: self.theta.len(),
                    scale,
                },
            },
            EnvironmentSpec::ContextualLinearBandit { .. } => ActionView::Finite(&self.context),
        }
    }

    /// Best expected reward over the current round's action set.
    pub fn optimal_value(&self) -> f64 {
        if self.spec.is_contextual() {
            max_of(&self.context_values)
        } else {
            self.best_value
        }
    }

    /// Plays `action`, returning a sampled reward and the exact instantaneous regret.
    pub fn step(&mut self, action: &Action) -> Result<RoundOutcome> {
        let (value, context_index) = self.expected_reward(action)?;
        let best = self.optimal_value();
        let reward = match &self.spec {
            EnvironmentSpec::GaussianMab { reward_std, .. } => {
                let std = *reward_std;
                value + std * self.normal()
            }
            EnvironmentSpec::BernoulliMab {
                means,
                reward_scale,
            } => {
                let Action::Arm(arm) = action else { unreachable!() };
                if self.rng.random::<f64>() < means[*arm] {
                    *reward_scale
                } else {
                    0.0
                }
            }
            EnvironmentSpec::LinearBandit { noise_std, .. }
            | EnvironmentSpec::ContextualLinearBandit { noise_std, .. } => {
                let std = *noise_std;
                value + std * self.normal()
            }
        };
        if self.spec.is_contextual() {
            self.context_pending = false;
        }
        Ok(RoundOutcome {
            reward,
            inst_regret: (best - value).max(0.0),
            value,
            context_index,
        })
    }

    /// `v^π` of an action, validating that it belongs to the current action set.
    pub fn expected_reward(&self, action: &Action) -> Result<(f64, Option<usize>)> {
        match (&self.spec, action) {
            (EnvironmentSpec::GaussianMab { means, .. }, Action::Arm(a)) => means
                .get(*a)
                .map(|m| (*m, None))
                .ok_or_else(|| arm_out_of_range(*a, means.len())),
            (
                EnvironmentSpec::BernoulliMab {
                    means,
                    reward_scale,
                },
                Action::Arm(a),
            ) => means
                .get(*a)
                .map(|m| (reward_scale * m, None))
                .ok_or_else(|| arm_out_of_range(*a, means.len())),
            (EnvironmentSpec::LinearBandit { action_set, .. }, Action::Vector(v)) => {
                if v.len() != self.theta.len() {
                    return Err(Error::Contract(format!(
                        "action has dimension {}, environment has {}",
                        v.len(),
                        self.theta.len()
                    )));
                }
                match *action_set {
                    ActionSet::UnitSphere => {
                        if (v.norm_squared() - 1.0).abs() > 1e-9 {
                            return Err(Error::Contract(format!(
                                "action norm {} is not on the unit sphere",
                                v.norm()
                            )));
                        }
                    }
                    ActionSet::Hypercube { scale } => {
                        let tol = 1e-12 * scale.max(1.0);
                        if v.iter().any(|x| (x.abs() - scale).abs() > tol) {
                            return Err(Error::Contract(
                                "action is not a vertex of the hypercube".into(),
                            ));
                        }
                    }
                }
                Ok((v.dot(&self.theta), None))
            }
            (EnvironmentSpec::ContextualLinearBandit { .. }, Action::Vector(v)) => {
                if !self.context_pending {
                    return Err(Error::Contract(
                        "no context has been sampled for this round".into(),
                    ));
                }
                self.context
                    .iter()
                    .position(|c| c == v)
                    .map(|k| (self.context_values[k], Some(k)))
                    .ok_or_else(|| {
                        Error::Contract("action is not one of this round's context vectors".into())
                    })
            }
            (_, Action::Arm(_)) => Err(Error::Contract(
                "arm index played in a linear environment".into(),
            )),
            (_, Action::Vector(_)) => Err(Error::Contract(
                "vector action played in a multi-armed environment".into(),
            )),
        }
    }

    fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

fn arm_out_of_range(arm: usize, arms: usize) -> Error {
    Error::Contract(format!("arm {arm} out of range for {arms} arms"))
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn prefix_config_error(err: Error, prefix: &str) -> Error {
    match err {
        Error::Config { path, message } => Error::Config {
            path: format!("{prefix}.{path}"),
            message,
        },
        other => other,
    }
}

/// Uniform draw from the unit sphere in `dim` dimensions: a normalised
/// standard Gaussian vector, redrawn if it happens to be zero.
pub fn uniform_sphere<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 0.0 {
            return v / norm;
        }
    }
}
