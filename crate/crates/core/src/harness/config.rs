use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::{Exp3State, DEFAULT_GRID};
use crate::env::{prefix_config_error, EnvironmentSpec};
use crate::meta::BalancingParams;
use crate::{Error, Result};

fn one() -> f64 {
    1.0
}

fn base_delta() -> f64 {
    0.1
}

fn meta_delta() -> f64 {
    0.05
}

fn default_reps() -> usize {
    100
}

fn default_grid() -> Vec<f64> {
    DEFAULT_GRID.to_vec()
}

/// A base learner as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseLearnerSpec {
    Ucb {
        #[serde(default = "one")]
        c: f64,
        #[serde(default = "base_delta")]
        delta: f64,
    },
    /// Linear Thompson sampling on the first `dim` coordinates; `dim`
    /// defaults to the ambient dimension.
    LinTs {
        #[serde(default = "one")]
        c: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
        #[serde(default = "one")]
        lambda: f64,
    },
}

/// Meta-learner selection with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetaSpec {
    D3rb {
        #[serde(default = "one")]
        d_min: f64,
        #[serde(default = "meta_delta")]
        delta: f64,
        #[serde(default = "one")]
        c: f64,
    },
    Ed2rb {
        #[serde(default = "one")]
        d_min: f64,
        #[serde(default = "meta_delta")]
        delta: f64,
        #[serde(default = "one")]
        c: f64,
    },
    /// `eta` defaults to `1/√T`.
    Corral {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta: Option<f64>,
        #[serde(default)]
        loss_flip: bool,
    },
    /// `eta` defaults to `√(ln M/(M T))`, `gamma` to `0.1/√T`.
    Exp3 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
    UcbMeta {
        #[serde(default = "one")]
        c: f64,
        #[serde(default = "base_delta")]
        delta: f64,
    },
    GreedyMeta,
    RbGrid {
        #[serde(default = "default_grid")]
        grid: Vec<f64>,
        #[serde(default = "meta_delta")]
        delta: f64,
        #[serde(default = "one")]
        c: f64,
    },
    SingleBase {
        index: usize,
    },
}

impl MetaSpec {
    pub fn d3rb() -> Self {
        MetaSpec::D3rb {
            d_min: 1.0,
            delta: meta_delta(),
            c: 1.0,
        }
    }

    pub fn ed2rb() -> Self {
        MetaSpec::Ed2rb {
            d_min: 1.0,
            delta: meta_delta(),
            c: 1.0,
        }
    }

    /// Short name used in listings and override strings.
    pub fn label(&self) -> String {
        match self {
            MetaSpec::D3rb { .. } => "d3rb".into(),
            MetaSpec::Ed2rb { .. } => "ed2rb".into(),
            MetaSpec::Corral { .. } => "corral".into(),
            MetaSpec::Exp3 { .. } => "exp3".into(),
            MetaSpec::UcbMeta { .. } => "ucb".into(),
            MetaSpec::GreedyMeta => "greedy".into(),
            MetaSpec::RbGrid { .. } => "rb-grid".into(),
            MetaSpec::SingleBase { index } => format!("single:{index}"),
        }
    }

    /// Parses a command-line override such as `corral-low` or `single:2`.
    /// Variants whose rates depend on the horizon are resolved against it.
    pub fn from_override(s: &str, horizon: usize) -> Result<Self> {
        let root_t = (horizon.max(1) as f64).sqrt();
        let meta = match s {
            "d3rb" => MetaSpec::d3rb(),
            "ed2rb" => MetaSpec::ed2rb(),
            "corral" => MetaSpec::Corral { eta: None, loss_flip: false },
            "corral-low" => MetaSpec::Corral { eta: Some(0.1 / root_t), loss_flip: false },
            "corral-high" => MetaSpec::Corral { eta: Some(10.0 / root_t), loss_flip: false },
            "exp3" => MetaSpec::Exp3 { eta: None, gamma: None },
            "exp3-low" => MetaSpec::Exp3 { eta: None, gamma: Some(0.0) },
            "exp3-high" => MetaSpec::Exp3 { eta: None, gamma: Some(1.0 / root_t) },
            "ucb" => MetaSpec::UcbMeta { c: 1.0, delta: base_delta() },
            "greedy" => MetaSpec::GreedyMeta,
            "rb-grid" => MetaSpec::RbGrid {
                grid: default_grid(),
                delta: meta_delta(),
                c: 1.0,
            },
            other => match other.strip_prefix("single:").map(str::parse::<usize>) {
                Some(Ok(index)) => MetaSpec::SingleBase { index },
                _ => {
                    return Err(Error::config(
                        "meta",
                        format!(
                            "unknown meta-learner `{other}` (expected one of d3rb, ed2rb, corral, \
                             corral-low, corral-high, exp3, exp3-low, exp3-high, ucb, greedy, \
                             rb-grid, single:<index>)"
                        ),
                    ))
                }
            },
        };
        Ok(meta)
    }

    /// Balancing parameters for D³RB / ED²RB.
    pub fn balancing_params(&self) -> Option<BalancingParams> {
        match *self {
            MetaSpec::D3rb { d_min, delta, c } | MetaSpec::Ed2rb { d_min, delta, c } => {
                Some(BalancingParams { d_min, delta, c })
            }
            _ => None,
        }
    }
}

/// Declarative description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub horizon: usize,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    /// Rounds between summary checkpoints; defaults to `T/100` (at least 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_stride: Option<usize>,
    pub environment: EnvironmentSpec,
    pub base_learners: Vec<BaseLearnerSpec>,
    pub meta: MetaSpec,
}

impl ExperimentConfig {
    /// Parses TOML text; errors name the offending field path.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text)
            .map_err(|e| Error::config("<document>", e.to_string().trim_end()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            // toml's own report carries the line and column, which survive
            // where the path stops at an internally tagged table
            let located = toml::from_str::<ExperimentConfig>(text)
                .err()
                .map_or_else(|| e.inner().message().to_string(), |t| t.to_string());
            Error::config(path, located.trim_end())
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<document>", e.to_string()))
    }

    /// Number of learners the meta-learner chooses between. RB-Grid expands
    /// every base learner into one copy per candidate coefficient.
    pub fn learner_count(&self) -> usize {
        match &self.meta {
            MetaSpec::RbGrid { grid, .. } => self.base_learners.len() * grid.len(),
            _ => self.base_learners.len(),
        }
    }

    pub fn stride(&self) -> usize {
        self.checkpoint_stride.unwrap_or(self.horizon / 100).max(1)
    }

    /// Checks invariants and fills every horizon-dependent default so that the
    /// echoed config is self-contained.
    pub fn resolve(mut self) -> Result<Self> {
        self.validate()?;
        let t = self.horizon as f64;
        let m = self.base_learners.len();
        self.checkpoint_stride = Some(self.stride());
        let ambient = self.environment.width();
        for b in &mut self.base_learners {
            if let BaseLearnerSpec::LinTs { dim, .. } = b {
                dim.get_or_insert(ambient);
            }
        }
        match &mut self.meta {
            MetaSpec::Corral { eta, .. } => {
                eta.get_or_insert(1.0 / t.sqrt());
            }
            MetaSpec::Exp3 { eta, gamma } => {
                let (eta0, gamma0) = Exp3State::default_rates(m, self.horizon);
                eta.get_or_insert(eta0);
                gamma.get_or_insert(gamma0);
            }
            _ => {}
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::config("horizon", "must be >= 1"));
        }
        if self.repetitions == 0 {
            return Err(Error::config("repetitions", "must be >= 1"));
        }
        if self.checkpoint_stride == Some(0) {
            return Err(Error::config("checkpoint_stride", "must be >= 1"));
        }
        self.environment
            .validate()
            .map_err(|e| prefix_config_error(e, "environment"))?;
        if self.base_learners.is_empty() {
            return Err(Error::config("base_learners", "at least one learner is required"));
        }
        let linear = self.environment.is_linear();
        let ambient = self.environment.width();
        for (i, b) in self.base_learners.iter().enumerate() {
            let at = |field: &str| format!("base_learners[{i}].{field}");
            match b {
                BaseLearnerSpec::Ucb { c, delta } => {
                    if linear {
                        return Err(Error::config(
                            format!("base_learners[{i}]"),
                            "UCB needs a multi-armed environment",
                        ));
                    }
                    check_scaling(*c, &at("c"))?;
                    check_delta(*delta, &at("delta"))?;
                }
                BaseLearnerSpec::LinTs { c, dim, lambda } => {
                    if !linear {
                        return Err(Error::config(
                            format!("base_learners[{i}]"),
                            "LinTS needs a linear environment",
                        ));
                    }
                    check_scaling(*c, &at("c"))?;
                    if !(lambda.is_finite() && *lambda > 0.0) {
                        return Err(Error::config(at("lambda"), "must be finite and > 0"));
                    }
                    if let Some(d) = dim {
                        if *d == 0 || *d > ambient {
                            return Err(Error::config(
                                at("dim"),
                                format!("{d} is outside 1..={ambient} (ambient dimension)"),
                            ));
                        }
                    }
                }
            }
        }
        let m = self.base_learners.len();
        match &self.meta {
            MetaSpec::D3rb { .. } | MetaSpec::Ed2rb { .. } => self
                .meta
                .balancing_params()
                .expect("balancing meta")
                .validate()
                .map_err(|e| prefix_config_error(e, "meta"))?,
            MetaSpec::Corral { eta, .. } => {
                if let Some(eta) = eta {
                    if !(eta.is_finite() && *eta > 0.0) {
                        return Err(Error::config("meta.eta", "must be finite and > 0"));
                    }
                }
            }
            MetaSpec::Exp3 { eta, gamma } => {
                if let Some(eta) = eta {
                    if !(eta.is_finite() && *eta >= 0.0) {
                        return Err(Error::config("meta.eta", "must be finite and >= 0"));
                    }
                }
                if let Some(gamma) = gamma {
                    if !(0.0..=1.0).contains(gamma) {
                        return Err(Error::config("meta.gamma", "must lie in [0, 1]"));
                    }
                }
            }
            MetaSpec::UcbMeta { c, delta } => {
                check_scaling(*c, "meta.c")?;
                check_delta(*delta, "meta.delta")?;
            }
            MetaSpec::GreedyMeta => {}
            MetaSpec::RbGrid { grid, delta, c } => {
                BalancingParams { d_min: 1.0, delta: *delta, c: *c }
                    .validate()
                    .map_err(|e| prefix_config_error(e, "meta"))?;
                if grid.is_empty() {
                    return Err(Error::config("meta.grid", "must not be empty"));
                }
                if grid.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
                    return Err(Error::config("meta.grid", "entries must be finite and > 0"));
                }
                if grid.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::config("meta.grid", "must be strictly increasing"));
                }
            }
            MetaSpec::SingleBase { index } => {
                if *index >= m {
                    return Err(Error::config(
                        "meta.index",
                        format!("{index} is out of range for {m} base learners"),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn check_scaling(c: f64, path: &str) -> Result<()> {
    if c.is_finite() && c >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(path, "must be finite and >= 0"))
    }
}

fn check_delta(delta: f64, path: &str) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::config(path, "must lie in (0, 1)"))
    }
}
