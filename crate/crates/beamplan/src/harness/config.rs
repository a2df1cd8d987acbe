//! Experiment configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::PlannerConfig;
use crate::stochastic::{BlockageModel, PathBlockage, ScenarioConfig};

/// Comparison method identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Proposed,
    Exhaustive,
    Greedy,
    Fixed,
}

impl MethodKind {
    pub fn name(&self) -> &'static str {
        match self {
            MethodKind::Proposed => "proposed",
            MethodKind::Exhaustive => "exhaustive",
            MethodKind::Greedy => "greedy",
            MethodKind::Fixed => "fixed",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "proposed" => Ok(MethodKind::Proposed),
            "exhaustive" => Ok(MethodKind::Exhaustive),
            "greedy" => Ok(MethodKind::Greedy),
            "fixed" => Ok(MethodKind::Fixed),
            other => Err(Error::InvalidArgument(format!(
                "unknown method `{other}` (expected proposed|exhaustive|greedy|fixed)"
            ))),
        }
    }
}

/// Uniform per-path blockage parameters, optionally keeping the LoS path
/// permanently unblocked so that coverage never becomes impossible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlockageConfig {
    pub rho_stay_unblocked: f64,
    pub rho_stay_blocked: f64,
    pub p_blocked_initial: f64,
    pub los_persistent: bool,
}

impl Default for BlockageConfig {
    fn default() -> Self {
        Self {
            rho_stay_unblocked: 0.95,
            rho_stay_blocked: 0.5,
            p_blocked_initial: 0.1,
            los_persistent: true,
        }
    }
}

impl BlockageConfig {
    pub fn to_model(&self, path_count: usize) -> Result<BlockageModel> {
        let params = PathBlockage {
            rho_stay_unblocked: self.rho_stay_unblocked,
            rho_stay_blocked: self.rho_stay_blocked,
            p_blocked_initial: self.p_blocked_initial,
        };
        if self.los_persistent {
            BlockageModel::los_persistent(params, path_count)
        } else {
            BlockageModel::uniform(params, path_count)
        }
    }
}

/// Codebook and array sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BookConfig {
    pub n_bs: usize,
    pub n_ue: usize,
    pub bs_beams: usize,
    pub ue_beams: usize,
}

impl Default for BookConfig {
    fn default() -> Self {
        Self {
            n_bs: 64,
            n_ue: 4,
            bs_beams: 128,
            ue_beams: 128,
        }
    }
}

/// Transmit and noise power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerConfig {
    pub p_dbm: f64,
    pub noise_dbm: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            p_dbm: 10.0,
            noise_dbm: -94.0,
        }
    }
}

/// Full experiment description; a pure function of this plus `seed`
/// determines every simulated quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub blockage: BlockageConfig,
    pub planner: PlannerConfig,
    pub books: BookConfig,
    pub power: PowerConfig,
    /// Number of independent trajectories to simulate.
    pub trajectories: usize,
    pub seed: u64,
    pub methods: Vec<MethodKind>,
    /// Region boundaries for the fixed baseline; `None` picks the default
    /// (4, 6, 10)-style split scaled to M.
    pub fixed_boundaries: Option<Vec<usize>>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            blockage: BlockageConfig::default(),
            planner: PlannerConfig::default(),
            books: BookConfig::default(),
            power: PowerConfig::default(),
            trajectories: 100,
            seed: 0,
            methods: vec![
                MethodKind::Proposed,
                MethodKind::Exhaustive,
                MethodKind::Greedy,
                MethodKind::Fixed,
            ],
            fixed_boundaries: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.planner.validate()?;
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument(
                "experiment: method list must be non-empty".into(),
            ));
        }
        if self.trajectories == 0 {
            return Err(Error::InvalidArgument(
                "experiment: need at least one trajectory".into(),
            ));
        }
        for (name, v) in [
            ("n_bs", self.books.n_bs),
            ("n_ue", self.books.n_ue),
            ("bs_beams", self.books.bs_beams),
            ("ue_beams", self.books.ue_beams),
            ("m", self.scenario.m),
        ] {
            if v == 0 {
                return Err(Error::InvalidArgument(format!(
                    "experiment: {name} must be positive"
                )));
            }
        }
        if let Some(bounds) = &self.fixed_boundaries {
            if bounds.last() != Some(&self.scenario.m) {
                return Err(Error::InvalidArgument(
                    "experiment: fixed boundaries must end at M".into(),
                ));
            }
        }
        Ok(())
    }

    /// Boundaries used by the fixed baseline: configured ones, or the stock
    /// three-region split (front 40%, middle 20%, tail).
    pub fn fixed_boundaries_or_default(&self) -> Vec<usize> {
        if let Some(b) = &self.fixed_boundaries {
            return b.clone();
        }
        let m = self.scenario.m;
        if m < 3 {
            return vec![m];
        }
        let a = (2 * m).div_ceil(5);
        let b = (3 * m).div_ceil(5).max(a + 1);
        vec![a, b.min(m - 1), m]
    }
}
