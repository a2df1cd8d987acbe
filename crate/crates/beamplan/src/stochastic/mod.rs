//! Probabilistic model of path skeletons along a trajectory: synthetic
//! scenario geometry, per-path Markov blockage, the finite-alphabet skeleton
//! process with exact conditional laws, and a ray-trace CSV importer.

mod blockage;
mod process;
mod raytrace;
mod scenario;

pub use blockage::{BlockageModel, PathBlockage};
pub use process::{
    derive_process, CoverageProb, Evidence, SkeletonProcess, DEFAULT_ENUMERATION_CAP,
    DEFAULT_STATE_CAP,
};
pub use raytrace::{export_raytrace_csv, import_raytrace_csv, import_raytrace_reader};
pub use scenario::{build_scenario, GeoPath, Scenario, ScenarioConfig};
