//! Synthetic scenario geometry: a straight quantized trajectory, a fixed BS,
//! and candidate paths (line of sight plus wall reflections) per location.
//!
//! Both arrays lie along the trajectory axis, so a propagation direction with
//! unit vector `d` maps to the array angle `asin(d . axis)`; front/back
//! ambiguity of the ULA folds rays naturally into `[-pi/2, pi/2]`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry parameters for the synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    /// Number of quantized location indices along the trajectory.
    pub m: usize,
    /// Trajectory length in meters.
    pub trajectory_len_m: f64,
    /// Perpendicular BS offset from the trajectory midpoint, in meters.
    pub bs_offset_m: f64,
    /// Number of wall reflectors (candidate paths = 1 + this).
    pub n_reflectors: usize,
    /// Carrier frequency, used only for the free-space amplitude scale.
    pub carrier_ghz: f64,
    /// Reflection loss range in dB; each reflector draws from it.
    pub reflection_loss_db_min: f64,
    pub reflection_loss_db_max: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            m: 10,
            trajectory_len_m: 10.0,
            bs_offset_m: 100.0,
            n_reflectors: 2,
            carrier_ghz: 28.0,
            reflection_loss_db_min: 1.0,
            reflection_loss_db_max: 5.0,
        }
    }
}

/// One geometric path at one location: azimuth angles and mean amplitude.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GeoPath {
    pub aod_rad: f64,
    pub aoa_rad: f64,
    /// Mean (large-scale) amplitude of the path coefficient.
    pub mean_amp: f64,
}

/// A fixed BS, a quantized trajectory, and candidate paths per location.
/// Candidate lists are index-aligned across locations: entry `j` is the same
/// physical path (LoS or one reflector) everywhere.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub bs_position: [f64; 2],
    pub trajectory_points: Vec<[f64; 2]>,
    pub candidate_paths: Vec<Vec<GeoPath>>,
}

impl Scenario {
    pub fn m(&self) -> usize {
        self.trajectory_points.len()
    }

    /// Candidate path count, if equal at every location.
    pub fn path_count(&self) -> Option<usize> {
        let first = self.candidate_paths.first()?.len();
        self.candidate_paths
            .iter()
            .all(|p| p.len() == first)
            .then_some(first)
    }
}

fn dir_angle(from: [f64; 2], to: [f64; 2]) -> (f64, f64) {
    let dx = to[0] - from[0];
    let dy = to[1] - from[1];
    let dist = (dx * dx + dy * dy).sqrt();
    ((dx / dist).clamp(-1.0, 1.0).asin(), dist)
}

/// Deterministic function of `(config, seed)`: place the BS above the
/// trajectory midpoint, draw wall reflectors, and derive geometrically
/// consistent angles and free-space amplitudes per location.
pub fn build_scenario(config: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    if config.m == 0 {
        return Err(Error::InvalidArgument("scenario: M must be >= 1".into()));
    }
    if config.bs_offset_m <= 0.0
        || config.trajectory_len_m < 0.0
        || !config.bs_offset_m.is_finite()
        || !config.trajectory_len_m.is_finite()
    {
        return Err(Error::InvalidArgument(
            "scenario: BS offset must be positive and trajectory length non-negative".into(),
        ));
    }
    if config.m > 1 && config.trajectory_len_m <= 0.0 {
        return Err(Error::InvalidArgument(
            "scenario: trajectory length must be positive for M > 1".into(),
        ));
    }
    if config.carrier_ghz <= 0.0 || !config.carrier_ghz.is_finite() {
        return Err(Error::InvalidArgument(
            "scenario: carrier frequency must be positive".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bs = [0.0, config.bs_offset_m];
    let half = config.trajectory_len_m / 2.0;
    let points: Vec<[f64; 2]> = if config.m == 1 {
        vec![[0.0, 0.0]]
    } else {
        (0..config.m)
            .map(|i| {
                let t = i as f64 / (config.m - 1) as f64;
                [-half + t * config.trajectory_len_m, 0.0]
            })
            .collect()
    };

    let lambda = 0.299_792_458 / config.carrier_ghz;
    let amp = |dist: f64| lambda / (4.0 * std::f64::consts::PI * dist);

    // Wall reflectors perpendicular to the street, alternating sides with
    // index-spread offsets. Arrays lie along the street axis, so only the
    // lateral displacement of a virtual BS separates a reflection from the
    // LoS in angle; walls past the street ends give each reflector its own
    // angular track.
    let mut walls = Vec::with_capacity(config.n_reflectors);
    let mut refl_coeff = Vec::with_capacity(config.n_reflectors);
    for i in 0..config.n_reflectors {
        let offset = half + 3.0 + 5.0 * (i / 2) as f64 + rng.gen_range(0.0..4.0);
        let side = if i % 2 == 0 { 1.0 } else { -1.0 };
        walls.push(side * offset);
        let loss_db: f64 = if config.reflection_loss_db_max > config.reflection_loss_db_min {
            rng.gen_range(config.reflection_loss_db_min..config.reflection_loss_db_max)
        } else {
            config.reflection_loss_db_min
        };
        refl_coeff.push(10f64.powf(-loss_db / 20.0));
    }

    let mut candidate_paths = Vec::with_capacity(config.m);
    for p in &points {
        let mut paths = Vec::with_capacity(1 + config.n_reflectors);

        // LoS: AoD is the bearing from BS to the point, AoA the reverse.
        let (aod, dist) = dir_angle(bs, *p);
        let (aoa, _) = dir_angle(*p, bs);
        paths.push(GeoPath {
            aod_rad: aod,
            aoa_rad: aoa,
            mean_amp: amp(dist),
        });

        for (wall_x, coeff) in walls.iter().zip(&refl_coeff) {
            // Mirror the BS across the wall plane x = wall_x; mirroring
            // negates the x-component of the departure direction.
            let virtual_bs = [2.0 * wall_x - bs[0], bs[1]];
            let (dep, dist) = dir_angle(virtual_bs, *p);
            let (arr, _) = dir_angle(*p, virtual_bs);
            paths.push(GeoPath {
                aod_rad: -dep,
                aoa_rad: arr,
                mean_amp: coeff * amp(dist),
            });
        }
        candidate_paths.push(paths);
    }

    Ok(Scenario {
        bs_position: bs,
        trajectory_points: points,
        candidate_paths,
    })
}
