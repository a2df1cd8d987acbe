//! Per-path two-state Markov blockage.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Blockage parameters of one path per unit location step.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PathBlockage {
    pub rho_stay_unblocked: f64,
    pub rho_stay_blocked: f64,
    pub p_blocked_initial: f64,
}

impl PathBlockage {
    /// A path that is never blocked.
    pub fn persistent() -> Self {
        Self {
            rho_stay_unblocked: 1.0,
            rho_stay_blocked: 1.0,
            p_blocked_initial: 0.0,
        }
    }

    /// A path whose blockage state never changes along the trajectory.
    pub fn frozen(p_blocked_initial: f64) -> Self {
        Self {
            rho_stay_unblocked: 1.0,
            rho_stay_blocked: 1.0,
            p_blocked_initial,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rho_stay_unblocked", self.rho_stay_unblocked),
            ("rho_stay_blocked", self.rho_stay_blocked),
            ("p_blocked_initial", self.p_blocked_initial),
        ] {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "blockage parameter {name} = {v} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Independent blockage chains, one entry per candidate path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockageModel {
    paths: Vec<PathBlockage>,
}

impl BlockageModel {
    pub fn new(paths: Vec<PathBlockage>) -> Result<Self> {
        for p in &paths {
            p.validate()?;
        }
        Ok(Self { paths })
    }

    /// The same parameters for every path.
    pub fn uniform(params: PathBlockage, count: usize) -> Result<Self> {
        Self::new(vec![params; count])
    }

    /// Path 0 (by convention the LoS) never blocks; the rest share `params`.
    /// Keeps the all-blocked skeleton unreachable, so every location can
    /// always be covered by its own measurement.
    pub fn los_persistent(params: PathBlockage, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidArgument(
                "blockage model needs at least one path".into(),
            ));
        }
        let mut paths = vec![params; count];
        paths[0] = PathBlockage::persistent();
        Self::new(paths)
    }

    pub fn paths(&self) -> &[PathBlockage] {
        &self.paths
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }
}
