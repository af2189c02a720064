//! Bandit model selection by data-driven regret balancing.
//!
//! The crate is organised around the pieces of a model-selection experiment:
//!
//! - [`env`]: stochastic environments that double as exact pseudo-regret oracles.
//! - [`base`]: base learners (UCB and linear Thompson sampling), each with its
//!   own internal clock.
//! - [`meta`]: the balancing meta-learners D³RB (misspecification test with
//!   doubling) and ED²RB (direct estimate with a clipped potential).
//! - [`baselines`]: Corral, EXP3, UCB and Greedy as meta-learners, and regret
//!   balancing over an exponential grid of candidate bounds.
//! - [`metrics`]: regret coefficients, comparator quantities and mean ± 2·SE
//!   summaries.
//! - [`harness`]: experiment configs, presets, the seeded round loop and CSV
//!   output.

pub mod base;
pub mod baselines;
pub mod env;
mod error;
pub mod harness;
pub mod meta;
pub mod metrics;
pub mod seeding;

pub use error::{Error, Result};
