//! Baseline meta-learners.

mod corral;
mod exp3;
mod index;
mod rb_grid;

pub use corral::{log_barrier_omd, CorralState, OmdStep};
pub use exp3::Exp3State;
pub use index::{greedy_meta_select, ucb_meta_select, PlayStats};
pub use rb_grid::{RbGridState, DEFAULT_GRID};

use rand::Rng;

use crate::{Error, Result};

/// Samples an index from a probability vector by inversion.
pub(crate) fn sample_index<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding slack past the last cumulative sum
    p.iter().rposition(|x| *x > 0.0).unwrap_or(p.len() - 1)
}

pub(crate) fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 {
        Err(Error::config("horizon", "must be >= 1"))
    } else {
        Ok(())
    }
}
