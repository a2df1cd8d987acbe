//! Experiment orchestration: beam-search complexity accounting, SNR
//! evaluation along trajectories, multi-trajectory aggregation, and report
//! emission.

mod config;
mod counting;
mod emit;
mod run;
mod snr;

pub use config::{BlockageConfig, BookConfig, ExperimentConfig, MethodKind, PowerConfig};
pub use counting::{count_presetup_searches, count_runtime_searches};
pub use emit::{emit_report, ReportFormat};
pub use run::{run_experiment, MethodReport, Report};
pub use snr::{evaluate_snr, per_location_best};
