use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{BaseLearnerSpec, ExperimentConfig, MetaSpec};
use crate::base::{BaseLearner, LinTsLearner, UcbLearner};
use crate::baselines::{
    greedy_meta_select, ucb_meta_select, CorralState, Exp3State, PlayStats, RbGridState,
};
use crate::env::{Environment, RoundOutcome};
use crate::meta::{BalancingParams, BalancingState, BalancingStep, Variant};
use crate::metrics::RegretTrace;
use crate::seeding::{repetition_seed, stream, StreamRole};
use crate::{Error, Result};

/// Meta-learner state of one repetition.
#[derive(Debug, Clone)]
pub enum Selector {
    Balancing(BalancingState),
    Corral(CorralState),
    Exp3(Exp3State),
    UcbMeta { stats: PlayStats, c: f64, delta: f64 },
    Greedy(PlayStats),
    RbGrid(RbGridState),
    Single(usize),
}

impl Selector {
    /// Builds the meta-learner for a resolved config.
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let m = cfg.base_learners.len();
        let t = cfg.horizon;
        Ok(match &cfg.meta {
            MetaSpec::D3rb { .. } | MetaSpec::Ed2rb { .. } => {
                let variant = if matches!(cfg.meta, MetaSpec::D3rb { .. }) {
                    Variant::D3rb
                } else {
                    Variant::Ed2rb
                };
                let params = cfg.meta.balancing_params().expect("balancing meta");
                Selector::Balancing(BalancingState::new(variant, m, params)?)
            }
            MetaSpec::Corral { eta, loss_flip } => {
                let eta = eta.unwrap_or(1.0 / (t as f64).sqrt());
                Selector::Corral(CorralState::new(m, t, eta, *loss_flip)?)
            }
            MetaSpec::Exp3 { eta, gamma } => Selector::Exp3(Exp3State::new(m, t, *eta, *gamma)?),
            MetaSpec::UcbMeta { c, delta } => Selector::UcbMeta {
                stats: PlayStats::new(m),
                c: *c,
                delta: *delta,
            },
            MetaSpec::GreedyMeta => Selector::Greedy(PlayStats::new(m)),
            MetaSpec::RbGrid { grid, delta, c } => {
                let params = BalancingParams { d_min: 1.0, delta: *delta, c: *c };
                Selector::RbGrid(RbGridState::new(m, grid, &params)?)
            }
            MetaSpec::SingleBase { index } => Selector::Single(*index),
        })
    }

    pub fn select(&self, rng: &mut ChaCha8Rng) -> usize {
        match self {
            Selector::Balancing(s) => s.select(),
            Selector::Corral(s) => s.select(rng),
            Selector::Exp3(s) => s.select(rng),
            Selector::UcbMeta { stats, c, delta } => ucb_meta_select(stats.counts(), stats.sums(), *c, *delta),
            Selector::Greedy(stats) => greedy_meta_select(stats.counts(), stats.sums()),
            Selector::RbGrid(s) => s.select(),
            Selector::Single(i) => *i,
        }
    }

    /// Feeds the chosen learner's reward back; balancing meta-learners report
    /// the potential change.
    pub fn update(&mut self, i: usize, reward: f64) -> Result<Option<BalancingStep>> {
        match self {
            Selector::Balancing(s) => return Ok(Some(s.update(i, reward))),
            Selector::Corral(s) => s.update(i, reward)?,
            Selector::Exp3(s) => s.update(i, reward)?,
            Selector::UcbMeta { stats, .. } | Selector::Greedy(stats) => stats.update(i, reward),
            Selector::RbGrid(s) => {
                s.update(i, reward)?;
            }
            Selector::Single(_) => {}
        }
        Ok(None)
    }
}

/// Everything visible at the end of one round, handed to observers.
pub struct RoundRecord<'a> {
    /// 1-based round index.
    pub round: usize,
    pub learner: usize,
    pub outcome: &'a RoundOutcome,
    pub step: Option<&'a BalancingStep>,
    pub selector: &'a Selector,
    pub learners: &'a [BaseLearner],
}

/// Instantiates the learners the meta-learner chooses between, each with its
/// own random stream. RB-Grid gets an independent instance per copy.
pub fn build_learners(cfg: &ExperimentConfig, rep: usize) -> Result<Vec<BaseLearner>> {
    let copies = cfg.learner_count() / cfg.base_learners.len();
    let ambient = cfg.environment.width();
    let mut out = Vec::with_capacity(cfg.learner_count());
    for (b, spec) in cfg.base_learners.iter().enumerate() {
        for k in 0..copies {
            let index = b * copies + k;
            let learner = match spec {
                BaseLearnerSpec::Ucb { c, delta } => BaseLearner::Ucb(UcbLearner::new(ambient, *c, *delta)?),
                BaseLearnerSpec::LinTs { c, dim, lambda } => BaseLearner::LinTs(LinTsLearner::new(
                    dim.unwrap_or(ambient),
                    ambient,
                    *lambda,
                    *c,
                    stream(cfg.seed, rep, StreamRole::Base(index)),
                )?),
            };
            out.push(learner);
        }
    }
    Ok(out)
}

pub fn run_repetition(cfg: &ExperimentConfig, rep: usize) -> Result<RegretTrace> {
    run_repetition_observed(cfg, rep, |_| {})
}

/// Runs the full round loop of repetition `rep`, calling `observer` after
/// every round.
pub fn run_repetition_observed<F>(cfg: &ExperimentConfig, rep: usize, mut observer: F) -> Result<RegretTrace>
where
    F: FnMut(&RoundRecord<'_>),
{
    cfg.validate()?;
    let mut env = Environment::with_rng(
        cfg.environment.clone(),
        stream(cfg.seed, rep, StreamRole::Environment),
    )?;
    let mut learners = build_learners(cfg, rep)?;
    let mut selector = Selector::new(cfg)?;
    let mut meta_rng = stream(cfg.seed, rep, StreamRole::Meta);
    let mut trace = RegretTrace::new(repetition_seed(cfg.seed, rep), learners.len());
    let mut doubled = matches!(selector, Selector::Balancing(_)).then(|| Vec::with_capacity(cfg.horizon));

    for round in 1..=cfg.horizon {
        let played = (|| -> Result<_> {
            if env.spec().is_contextual() {
                env.sample_context()?;
            }
            let i = selector.select(&mut meta_rng);
            let action = learners[i].act(env.actions())?;
            let outcome = env.step(&action)?;
            learners[i].update(&action, outcome.reward)?;
            let step = selector.update(i, outcome.reward)?;
            Ok((i, outcome, step))
        })();
        let (i, outcome, step) = played.map_err(|e| e.at_round(round))?;
        trace.push(i, outcome.inst_regret);
        if let (Some(d), Some(s)) = (doubled.as_mut(), step.as_ref()) {
            d.push(s.doubled());
        }
        observer(&RoundRecord {
            round,
            learner: i,
            outcome: &outcome,
            step: step.as_ref(),
            selector: &selector,
            learners: &learners,
        });
    }
    trace.doubled = doubled;
    Ok(trace)
}

/// Runs all repetitions on a pool of `threads` workers (all cores when
/// `None`); traces come back ordered by repetition index.
pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<RegretTrace>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Contract(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        (0..cfg.repetitions)
            .into_par_iter()
            .map(|rep| run_repetition(cfg, rep))
            .collect()
    })
}
