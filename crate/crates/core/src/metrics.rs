//! Regret diagnostics computed from oracle regrets, and summaries across
//! repetitions.

use std::collections::BTreeMap;

use crate::{Error, Result};

/// Oracle record of one repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub seed: u64,
    /// `Reg(t)` for `t = 1..=T`.
    pub cumulative: Vec<f64>,
    /// Learner chosen in each round.
    pub chosen: Vec<usize>,
    /// Instantaneous regrets of each learner in its own internal-clock order.
    pub learner_regrets: Vec<Vec<f64>>,
    /// Whether the chosen learner's potential at least doubled in each
    /// round. Present only for meta-learners that keep potentials.
    pub doubled: Option<Vec<bool>>,
}

impl RegretTrace {
    pub fn new(seed: u64, learners: usize) -> Self {
        RegretTrace {
            seed,
            cumulative: Vec::new(),
            chosen: Vec::new(),
            learner_regrets: vec![Vec::new(); learners],
            doubled: None,
        }
    }

    pub fn horizon(&self) -> usize {
        self.cumulative.len()
    }

    pub fn learners(&self) -> usize {
        self.learner_regrets.len()
    }

    pub fn push(&mut self, learner: usize, inst_regret: f64) {
        let prev = self.cumulative.last().copied().unwrap_or(0.0);
        self.cumulative.push(prev + inst_regret);
        self.chosen.push(learner);
        self.learner_regrets[learner].push(inst_regret);
    }

    pub fn final_regret(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn counts(&self) -> Vec<usize> {
        self.learner_regrets.iter().map(Vec::len).collect()
    }

    /// `|Reg(T) − Σ_i Σ_k reg(π^i_(k))|`.
    pub fn decomposition_gap(&self) -> f64 {
        let per_learner: f64 = self.learner_regrets.iter().flatten().sum();
        (self.final_regret() - per_learner).abs()
    }
}

/// `d_(k) = max{Σ_{ℓ≤k} reg_ℓ / √k, d_min}` for `k = 1..=len`.
pub fn regret_coefficient(regrets: &[f64], d_min: f64) -> Vec<f64> {
    let mut total = 0.0;
    regrets
        .iter()
        .enumerate()
        .map(|(k, r)| {
            total += r;
            (total / ((k + 1) as f64).sqrt()).max(d_min)
        })
        .collect()
}

/// Running maximum.
pub fn monotonic_coefficient(d: &[f64]) -> Vec<f64> {
    let mut top = f64::NEG_INFINITY;
    d.iter()
        .map(|x| {
            top = top.max(*x);
            top
        })
        .collect()
}

/// Comparator quantities of one repetition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparators {
    /// `min_i d̄^i_T`.
    pub dbar_star: f64,
    /// `min_i max_j d^i` evaluated at `n^i_{T_j}`; absent without potentials.
    pub d_star: Option<f64>,
}

/// Computes `d̄⋆_T` and, when the trace carries a potential history, `d⋆_T`.
/// An unplayed learner (or a learner evaluated before its first play) has
/// coefficient `d_min`.
pub fn comparator_quantities(trace: &RegretTrace, d_min: f64) -> Comparators {
    let coefficients: Vec<Vec<f64>> = trace
        .learner_regrets
        .iter()
        .map(|r| regret_coefficient(r, d_min))
        .collect();
    let at = |i: usize, k: usize| if k == 0 { d_min } else { coefficients[i][k - 1] };
    let dbar_star = coefficients
        .iter()
        .map(|d| d.iter().copied().fold(d_min, f64::max))
        .fold(f64::INFINITY, f64::min);

    let d_star = trace.doubled.as_ref().map(|doubled| {
        let m = trace.learners();
        // T_j: last round (1-based) where j was played without doubling
        let mut last = vec![0usize; m];
        for (t, (&j, &dbl)) in trace.chosen.iter().zip(doubled).enumerate() {
            if !dbl {
                last[j] = t + 1;
            }
        }
        let mut counts_at: Vec<Vec<usize>> = vec![vec![0; m]; m];
        let mut running = vec![0usize; m];
        let mut by_round: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (j, t) in last.iter().enumerate() {
            by_round.entry(*t).or_default().push(j);
        }
        for (t, &i) in trace.chosen.iter().enumerate() {
            running[i] += 1;
            if let Some(js) = by_round.get(&(t + 1)) {
                for &j in js {
                    counts_at[j] = running.clone();
                }
            }
        }
        (0..m)
            .map(|i| (0..m).map(|j| at(i, counts_at[j][i])).fold(f64::NEG_INFINITY, f64::max))
            .fold(f64::INFINITY, f64::min)
    });
    Comparators { dbar_star, d_star }
}

/// Source of cumulative regret values at given rounds.
pub trait CumulativeRegret {
    fn horizon(&self) -> usize;
    fn cumulative_at(&self, round: usize) -> Option<f64>;
}

impl CumulativeRegret for RegretTrace {
    fn horizon(&self) -> usize {
        self.cumulative.len()
    }

    fn cumulative_at(&self, round: usize) -> Option<f64> {
        round.checked_sub(1).and_then(|i| self.cumulative.get(i)).copied()
    }
}

/// Sparse cumulative regret, e.g. a trace file written at checkpoints only.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseTrace {
    pub rows: BTreeMap<usize, f64>,
}

impl CumulativeRegret for SparseTrace {
    fn horizon(&self) -> usize {
        self.rows.keys().next_back().copied().unwrap_or(0)
    }

    fn cumulative_at(&self, round: usize) -> Option<f64> {
        self.rows.get(&round).copied()
    }
}

/// One row of a summary table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub round: usize,
    pub mean_regret: f64,
    /// Two sample standard errors.
    pub two_se: f64,
    /// Mean of `Reg(t)/√t`.
    pub mean_regret_scale: f64,
}

/// Mean and `2·SE` of cumulative regret across repetitions at each checkpoint.
pub fn summarize<T: CumulativeRegret>(traces: &[T], checkpoints: &[usize]) -> Result<Vec<SummaryRow>> {
    if traces.len() < 2 {
        return Err(Error::Contract(format!(
            "standard error needs at least 2 traces, got {}",
            traces.len()
        )));
    }
    let reps = traces.len() as f64;
    checkpoints
        .iter()
        .map(|&round| {
            let values = traces
                .iter()
                .enumerate()
                .map(|(rep, trace)| {
                    if round == 0 || round > trace.horizon() {
                        return Err(Error::Contract(format!(
                            "checkpoint {round} outside 1..={} (trace {rep})",
                            trace.horizon()
                        )));
                    }
                    trace.cumulative_at(round).ok_or_else(|| {
                        Error::Contract(format!("trace {rep} has no value at round {round}"))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            let (mean, sd) = mean_and_sample_std(&values);
            Ok(SummaryRow {
                round,
                mean_regret: mean,
                two_se: 2.0 * sd / reps.sqrt(),
                mean_regret_scale: mean / (round as f64).sqrt(),
            })
        })
        .collect()
}

pub(crate) fn mean_and_sample_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Checkpoints every `stride` rounds plus the horizon itself.
pub fn checkpoints(horizon: usize, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let mut out: Vec<usize> = (1..=horizon / stride).map(|k| k * stride).collect();
    if out.last() != Some(&horizon) && horizon > 0 {
        out.push(horizon);
    }
    out
}
