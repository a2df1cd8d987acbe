//! Planner parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Chance-constraint thresholds and size caps for the planner.
///
/// `gamma` is interpreted against the raw similarity range `[0, L]` (it is
/// not normalized by `L`); the coverage test bounds the probability of the
/// dissimilarity event `d <= gamma` by `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub gamma: f64,
    pub epsilon: f64,
    /// Skeleton length (number of tracked paths).
    pub l: usize,
    /// Largest alphabet the exact DP will accept.
    pub state_cap: usize,
    /// Caps for the expectimax verification oracle.
    pub oracle_m_cap: usize,
    pub oracle_state_cap: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.2,
            epsilon: 0.1,
            l: 3,
            state_cap: 64,
            oracle_m_cap: 6,
            oracle_state_cap: 4,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(Error::InvalidArgument("planner: L must be >= 1".into()));
        }
        if !self.gamma.is_finite() || self.gamma < 0.0 || self.gamma > self.l as f64 {
            return Err(Error::InvalidArgument(format!(
                "planner: gamma = {} outside [0, L = {}]",
                self.gamma, self.l
            )));
        }
        if !self.epsilon.is_finite() || !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidArgument(format!(
                "planner: epsilon = {} outside [0, 1]",
                self.epsilon
            )));
        }
        Ok(())
    }
}
