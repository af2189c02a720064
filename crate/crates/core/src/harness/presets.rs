//! Built-in experiment definitions.
//!
//! Every preset runs ED²RB by default; switch the meta-learner with
//! [`MetaSpec::from_override`] or by editing the echoed config.

use super::config::{BaseLearnerSpec, ExperimentConfig, MetaSpec};
use crate::env::{ActionSet, EnvironmentSpec};

/// Preset names in listing order.
pub const PRESET_NAMES: [&str; 19] = [
    "exp1", "exp2", "exp3", "exp4", "exp5", "exp6", "expA", "expB", "expC", "expD", "expE", "expF",
    "expG", "expH", "expI", "expJ", "expK", "expL", "fig1",
];

const LINTS_SCALINGS: [f64; 5] = [0.0, 0.16, 2.5, 5.0, 25.0];
const REPS: usize = 100;

/// One-line description of a preset.
pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "exp1" => "self model selection: 10 greedy UCB learners, 5-arm Gaussian, T=20000",
        "exp2" => "UCB scalings {0,4,6,20}, 5-arm Gaussian, T=10000",
        "exp3" => "LinTS scalings, unit sphere d=10, T=1000",
        "exp4" => "LinTS scalings, contextual d=10 with 10 actions, T=1000",
        "exp5" => "nested LinTS dims {2,5,10,15}, unit sphere, T=1000",
        "exp6" => "nested LinTS dims {2,5,10,15}, contextual, T=20000",
        "expA" => "UCB scalings, 4-arm Bernoulli, T=20000",
        "expB" => "self model selection: 10 UCB learners, 2 arms 30*Bernoulli, T=20000",
        "expC" => "LinTS scalings, hypercube {-1,1}^5, T=20000",
        "expD" => "LinTS scalings, hypercube d=10 scaled 1/sqrt(10), T=20000",
        "expE" => "LinTS scalings, hypercube d=100 scaled 0.1, T=20000",
        "expF" => "LinTS scalings, unit sphere d=5, T=20000",
        "expG" => "LinTS scalings, unit sphere d=100, T=20000",
        "expH" => "LinTS scalings, contextual d=5, T=20000",
        "expI" => "LinTS scalings, contextual d=100, T=20000",
        "expJ" => "nested LinTS dims {10,30,50,100}, unit sphere, T=20000",
        "expK" => "nested LinTS dims {2,5,10,15}, hypercube d=15, T=20000",
        "expL" => "nested LinTS dims {10,30,50,100}, hypercube d=100, T=20000",
        "fig1" => "UCB c=3 vs c=4, 5-arm Gaussian with std 6, T=10000",
        _ => return None,
    })
}

/// `(0, 1, ..., n−1)`, optionally rescaled to norm `norm`, zero-padded to `width`.
fn ramp(n: usize, norm: Option<f64>, width: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|i| i as f64).collect();
    if let Some(target) = norm {
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x *= target / len);
    }
    v.resize(width, 0.0);
    v
}

fn ucb_learners(scalings: &[f64]) -> Vec<BaseLearnerSpec> {
    scalings
        .iter()
        .map(|&c| BaseLearnerSpec::Ucb { c, delta: 0.1 })
        .collect()
}

fn lints_scalings() -> Vec<BaseLearnerSpec> {
    LINTS_SCALINGS
        .iter()
        .map(|&c| BaseLearnerSpec::LinTs { c, dim: None, lambda: 1.0 })
        .collect()
}

fn lints_nested(dims: &[usize]) -> Vec<BaseLearnerSpec> {
    dims.iter()
        .map(|&d| BaseLearnerSpec::LinTs { c: 2.0, dim: Some(d), lambda: 1.0 })
        .collect()
}

fn sphere(theta_star: Vec<f64>) -> EnvironmentSpec {
    EnvironmentSpec::LinearBandit {
        theta_star,
        action_set: ActionSet::UnitSphere,
        noise_std: 1.0,
    }
}

fn hypercube(theta_star: Vec<f64>, scale: f64) -> EnvironmentSpec {
    EnvironmentSpec::LinearBandit {
        theta_star,
        action_set: ActionSet::Hypercube { scale },
        noise_std: 1.0,
    }
}

fn contextual(theta_star: Vec<f64>) -> EnvironmentSpec {
    EnvironmentSpec::ContextualLinearBandit {
        theta_star,
        context_size: 10,
        noise_std: 1.0,
    }
}

fn gaussian_five() -> EnvironmentSpec {
    EnvironmentSpec::GaussianMab {
        means: vec![0.5, 1.0, 0.2, 0.1, 0.6],
        reward_std: 1.0,
    }
}

/// Looks up a preset by name.
pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let (horizon, environment, base_learners) = match name {
        "exp1" => (20_000, gaussian_five(), ucb_learners(&[0.0; 10])),
        "exp2" => (10_000, gaussian_five(), ucb_learners(&[0.0, 4.0, 6.0, 20.0])),
        "exp3" => (1_000, sphere(ramp(10, Some(5.0), 10)), lints_scalings()),
        "exp4" => (1_000, contextual(ramp(10, None, 10)), lints_scalings()),
        "exp5" => (1_000, sphere(ramp(5, None, 15)), lints_nested(&[2, 5, 10, 15])),
        "exp6" => (20_000, contextual(ramp(5, Some(1.0), 15)), lints_nested(&[2, 5, 10, 15])),
        "expA" => (
            20_000,
            EnvironmentSpec::BernoulliMab {
                means: vec![0.1, 0.2, 0.5, 0.8],
                reward_scale: 1.0,
            },
            ucb_learners(&[0.0, 0.08, 0.16, 0.64, 1.24, 2.5, 5.0, 10.0, 25.0]),
        ),
        "expB" => (
            20_000,
            EnvironmentSpec::BernoulliMab {
                means: vec![0.1, 0.2],
                reward_scale: 30.0,
            },
            ucb_learners(&[1.0; 10]),
        ),
        "expC" => (20_000, hypercube(ramp(5, Some(5.0), 5), 1.0), lints_scalings()),
        "expD" => (20_000, hypercube(ramp(10, Some(5.0), 10), 10f64.sqrt().recip()), lints_scalings()),
        "expE" => (20_000, hypercube(ramp(100, Some(5.0), 100), 0.1), lints_scalings()),
        "expF" => (20_000, sphere(ramp(5, Some(5.0), 5)), lints_scalings()),
        "expG" => (20_000, sphere(ramp(100, Some(5.0), 100)), lints_scalings()),
        "expH" => (20_000, contextual(ramp(5, Some(5.0), 5)), lints_scalings()),
        "expI" => (20_000, contextual(ramp(100, Some(5.0), 100)), lints_scalings()),
        "expJ" => (20_000, sphere(ramp(30, Some(5.0), 100)), lints_nested(&[10, 30, 50, 100])),
        "expK" => (
            20_000,
            hypercube(ramp(5, None, 15), 15f64.sqrt().recip()),
            lints_nested(&[2, 5, 10, 15]),
        ),
        "expL" => (
            20_000,
            hypercube(ramp(30, Some(5.0), 100), 0.1),
            lints_nested(&[10, 30, 50, 100]),
        ),
        "fig1" => (
            10_000,
            EnvironmentSpec::GaussianMab {
                means: vec![1.0, 0.6, 0.5, 0.2, 0.1],
                reward_std: 6.0,
            },
            ucb_learners(&[3.0, 4.0]),
        ),
        _ => return None,
    };
    Some(ExperimentConfig {
        name: name.to_string(),
        horizon,
        repetitions: REPS,
        seed: 0,
        checkpoint_stride: None,
        environment,
        base_learners,
        meta: MetaSpec::ed2rb(),
    })
}
