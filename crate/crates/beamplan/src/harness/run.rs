//! Multi-trajectory experiment loop.
//!
//! Each trajectory draws its own scenario (same trajectory/BS geometry,
//! fresh reflector placement), derives the skeleton process, samples one
//! realized state path, runs every configured method, and tallies exact
//! search counts and per-location SNR. Trajectories own RNG streams derived
//! from `(seed, index)`, so parallel and serial runs produce identical
//! reports.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arraysim::{dft_codebook, make_channel, ChannelMatrix, Codebook, PathComponent};
use crate::baselines::{exhaustive_plan, fixed_plan, greedy_plan};
use crate::error::{Error, Result};
use crate::harness::{
    count_presetup_searches, count_runtime_searches, evaluate_snr, ExperimentConfig, MethodKind,
};
use crate::planner::{realize_on_state_path, solve, Partition};
use crate::skeleton::QuantizedSkeleton;
use crate::stochastic::{build_scenario, derive_process};

/// Aggregated results of one method across all trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: MethodKind,
    /// Mean number of measured reference points.
    pub mean_k: f64,
    /// Mean pre-setup search count (`K |F| |W|` per trajectory).
    pub presetup_mean: f64,
    /// Mean run-time search count (`K L^2` per trajectory).
    pub runtime_mean: f64,
    /// Per-location mean SNR in dB (dB of the mean linear SNR across
    /// trajectories; blocked links contribute zero linear SNR).
    pub snr_per_location_db: Vec<f64>,
    /// Realized measurement count -> number of trajectories.
    pub realized_k: BTreeMap<usize, usize>,
    /// Region size -> number of regions over all trajectories.
    pub region_sizes: BTreeMap<usize, usize>,
    /// Realized partition of every trajectory, in order.
    pub partitions: Vec<Partition>,
}

/// Full experiment output; a pure function of the configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub methods: Vec<MethodReport>,
}

impl Report {
    pub fn method(&self, kind: MethodKind) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == kind)
    }
}

struct TrajectoryOutcome {
    /// Per method: (measured count, presetup, runtime, snr trace, partition).
    per_method: Vec<(usize, u64, u64, Vec<f64>, Partition)>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn substream(seed: u64, index: u64, salt: u64) -> u64 {
    splitmix(seed ^ splitmix(index.wrapping_add(salt)))
}

fn attach_trajectory(err: Error, t: usize) -> Error {
    match err {
        Error::Capacity(msg) => Error::Capacity(format!("trajectory {t}: {msg}")),
        Error::InvalidArgument(msg) => Error::InvalidArgument(format!("trajectory {t}: {msg}")),
        Error::ModelMismatch(msg) => Error::ModelMismatch(format!("trajectory {t}: {msg}")),
        Error::Infeasible(msg) => Error::Infeasible(format!("trajectory {t}: {msg}")),
        Error::NullConditioning(msg) => {
            Error::NullConditioning(format!("trajectory {t}: {msg}"))
        }
        other => other,
    }
}

fn run_trajectory(
    config: &ExperimentConfig,
    f_book: &Codebook,
    w_book: &Codebook,
    t: usize,
) -> Result<TrajectoryOutcome> {
    let scenario = build_scenario(&config.scenario, substream(config.seed, t as u64, 0x5ce0))?;
    let path_count = scenario.path_count().ok_or_else(|| {
        Error::InvalidArgument("scenario has inconsistent path counts".into())
    })?;
    let blockage = config.blockage.to_model(path_count)?;
    let process = derive_process(
        &scenario,
        &blockage,
        f_book,
        w_book,
        config.planner.l,
        config.planner.state_cap,
    )?;
    let m = process.m();

    let mut rng = ChaCha8Rng::seed_from_u64(substream(config.seed, t as u64, 0x7a11));
    let state_path = process.sample_path(&mut rng);

    // True channels: unblocked paths of the realized pattern, with seeded
    // per-path phases. Phases are drawn for every candidate path so the
    // stream does not depend on the blockage realization.
    let mut channels: Vec<ChannelMatrix> = Vec::with_capacity(m);
    for (x, paths) in scenario.candidate_paths.iter().enumerate() {
        let phases: Vec<f64> = (0..paths.len())
            .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
            .collect();
        let blocked = process
            .blockage_pattern(state_path[x])
            .ok_or_else(|| Error::InvalidArgument("process lacks blockage patterns".into()))?;
        let components: Vec<PathComponent> = paths
            .iter()
            .zip(&phases)
            .zip(blocked)
            .filter(|(_, &b)| !b)
            .map(|((g, &phase), _)| {
                PathComponent::new(Complex64::from_polar(g.mean_amp, phase), g.aod_rad, g.aoa_rad)
            })
            .collect();
        channels.push(if components.is_empty() {
            ChannelMatrix::zero(config.books.n_ue, config.books.n_bs)
        } else {
            make_channel(&components, config.books.n_bs, config.books.n_ue)?
        });
    }

    let realized_skeletons: Vec<QuantizedSkeleton> = (1..=m)
        .map(|x| process.skeleton(x, state_path[x - 1]).clone())
        .collect();

    let mut per_method = Vec::with_capacity(config.methods.len());
    for method in &config.methods {
        let partition = match method {
            MethodKind::Proposed => {
                let plan = solve(&process, &config.planner, m)?;
                realize_on_state_path(&plan, &process, &state_path)?
            }
            MethodKind::Exhaustive => exhaustive_plan(m)?,
            MethodKind::Greedy => greedy_plan(&realized_skeletons, &process, &config.planner)?,
            MethodKind::Fixed => fixed_plan(m, &config.fixed_boundaries_or_default())?,
        };
        let k = partition.measured_count();
        let presetup =
            count_presetup_searches(k, config.books.bs_beams, config.books.ue_beams)?;
        let runtime = count_runtime_searches(k, config.planner.l)?;
        let snr = evaluate_snr(
            &partition,
            &channels,
            &realized_skeletons,
            f_book,
            w_book,
            config.power.p_dbm,
            config.power.noise_dbm,
        )?;
        per_method.push((k, presetup, runtime, snr, partition));
    }
    Ok(TrajectoryOutcome { per_method })
}

/// Run the configured methods over `trajectories` seeded trajectories and
/// aggregate counts, SNR traces, and partition statistics. Deterministic in
/// `(config, seed)`; trajectories execute in parallel.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let f_book = dft_codebook(config.books.n_bs, config.books.bs_beams)?;
    let w_book = dft_codebook(config.books.n_ue, config.books.ue_beams)?;

    let outcomes: Vec<TrajectoryOutcome> = (0..config.trajectories)
        .into_par_iter()
        .map(|t| run_trajectory(config, &f_book, &w_book, t).map_err(|e| attach_trajectory(e, t)))
        .collect::<Result<_>>()?;

    let m = config.scenario.m;
    let t_count = config.trajectories as f64;
    let mut methods = Vec::with_capacity(config.methods.len());
    for (mi, method) in config.methods.iter().enumerate() {
        let mut k_sum = 0usize;
        let mut presetup_sum = 0u64;
        let mut runtime_sum = 0u64;
        let mut snr_linear_sum = vec![0.0f64; m];
        let mut realized_k = BTreeMap::new();
        let mut region_sizes = BTreeMap::new();
        let mut partitions = Vec::with_capacity(outcomes.len());
        for outcome in &outcomes {
            let (k, presetup, runtime, snr, partition) = &outcome.per_method[mi];
            k_sum += k;
            presetup_sum += presetup;
            runtime_sum += runtime;
            for (x, v) in snr.iter().enumerate() {
                if v.is_finite() {
                    snr_linear_sum[x] += 10f64.powf(v / 10.0);
                }
            }
            *realized_k.entry(*k).or_insert(0) += 1;
            for r in 0..partition.region_count() {
                let size = partition.boundaries[r + 1] - partition.boundaries[r];
                *region_sizes.entry(size).or_insert(0) += 1;
            }
            partitions.push(partition.clone());
        }
        let snr_per_location_db = snr_linear_sum
            .iter()
            .map(|&s| {
                if s > 0.0 {
                    10.0 * (s / t_count).log10()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        methods.push(MethodReport {
            method: *method,
            mean_k: k_sum as f64 / t_count,
            presetup_mean: presetup_sum as f64 / t_count,
            runtime_mean: runtime_sum as f64 / t_count,
            snr_per_location_db,
            realized_k,
            region_sizes,
            partitions,
        });
    }
    Ok(Report {
        config: config.clone(),
        methods,
    })
}
