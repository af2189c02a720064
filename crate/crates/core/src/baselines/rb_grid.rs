use crate::meta::{argmin, conc_width, BalancingParams};
use crate::{Error, Result};

/// Candidate regret coefficients used when a config does not specify a grid.
pub const DEFAULT_GRID: [f64; 5] = [1.0, 2.0, 4.0, 8.0, 16.0];

/// Regret balancing with elimination over copies of each base learner, one
/// copy per candidate coefficient. Copy `k` wraps base learner `k / G` with
/// coefficient `grid[k % G]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RbGridState {
    grid: Vec<f64>,
    bases: usize,
    active: Vec<bool>,
    counts: Vec<u64>,
    sums: Vec<f64>,
    delta: f64,
    c: f64,
}

impl RbGridState {
    pub fn new(bases: usize, grid: &[f64], params: &BalancingParams) -> Result<Self> {
        params.validate()?;
        if bases == 0 {
            return Err(Error::config("base_learners", "at least one learner is required"));
        }
        if grid.is_empty() {
            return Err(Error::config("meta.grid", "must not be empty"));
        }
        if grid.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::config("meta.grid", "entries must be finite and > 0"));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("meta.grid", "must be strictly increasing"));
        }
        let copies = bases * grid.len();
        Ok(RbGridState {
            grid: grid.to_vec(),
            bases,
            active: vec![true; copies],
            counts: vec![0; copies],
            sums: vec![0.0; copies],
            delta: params.delta,
            c: params.c,
        })
    }

    pub fn copies(&self) -> usize {
        self.active.len()
    }

    pub fn bases(&self) -> usize {
        self.bases
    }

    /// Base learner wrapped by a copy.
    pub fn base_of(&self, copy: usize) -> usize {
        copy / self.grid.len()
    }

    pub fn coefficient(&self, copy: usize) -> f64 {
        self.grid[copy % self.grid.len()]
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    /// Active copy with the smallest putative regret `d_g √n`.
    pub fn select(&self) -> usize {
        let putative: Vec<f64> = (0..self.copies())
            .map(|k| {
                if self.active[k] {
                    self.coefficient(k) * (self.counts[k] as f64).sqrt()
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        argmin(&putative)
    }

    fn width(&self, n: u64) -> f64 {
        conc_width(n, self.copies(), self.delta, self.c)
    }

    /// Records the reward of copy `k` and deactivates it when its candidate
    /// bound is refuted. Returns whether the copy was eliminated.
    pub fn update(&mut self, k: usize, reward: f64) -> Result<bool> {
        if !self.active[k] {
            return Err(Error::Contract(format!("copy {k} is not active")));
        }
        self.counts[k] += 1;
        self.sums[k] += reward;
        let n = self.counts[k];
        let nf = n as f64;
        let best_lcb = (0..self.copies())
            .filter(|&j| self.active[j] && self.counts[j] > 0)
            .map(|j| self.sums[j] / self.counts[j] as f64 - self.width(self.counts[j]))
            .fold(f64::NEG_INFINITY, f64::max);
        let ucb = self.sums[k] / nf + self.coefficient(k) * nf.sqrt() / nf + self.width(n);
        if ucb >= best_lcb {
            return Ok(false);
        }
        self.active[k] = false;
        if !self.active.iter().any(|a| *a) {
            // keep the copy with the most permissive bound alive
            let g = self.grid.len();
            let keep = (0..self.copies())
                .filter(|j| j % g == g - 1)
                .max_by(|a, b| self.counts[*a].cmp(&self.counts[*b]).then(b.cmp(a)))
                .expect("grid is non-empty");
            self.active[keep] = true;
        }
        Ok(true)
    }
}
