//! Trajectory-aware beam-search planning for mobile mmWave links.
//!
//! A base station serving a device on a known, quantized trajectory can avoid
//! sweeping its full beam codebook at every location: channels at nearby
//! locations share structure, so a handful of measured reference points can
//! cover whole regions of the trajectory. This crate models the per-location
//! path skeletons as a finite Markov chain, computes the adaptive measurement
//! policy that minimizes the expected number of reference points while
//! honoring a per-location chance constraint on beam similarity, and
//! evaluates that policy against exhaustive, greedy, and fixed-region
//! baselines in a small link simulator.
//!
//! Modules:
//! - [`arraysim`]: ULA steering vectors, channel synthesis, SNR, codebooks.
//! - [`skeleton`]: path skeletons, the beam-space similarity metric, and
//!   quantization onto codebook grids.
//! - [`stochastic`]: scenario geometry, per-path Markov blockage, the
//!   skeleton process with exact conditional laws, ray-trace CSV import.
//! - [`planner`]: the recursive block value functions, the adaptive plan,
//!   plan realization into regions, and an expectimax verification oracle.
//! - [`baselines`]: exhaustive, greedy, and fixed-region reference plans.
//! - [`harness`]: experiment orchestration, search-count accounting, SNR
//!   evaluation, and report emission.

pub mod arraysim;
pub mod baselines;
pub mod error;
pub mod harness;
pub mod planner;
pub mod prob;
pub mod skeleton;
pub mod stochastic;

pub use error::{Error, Result};
