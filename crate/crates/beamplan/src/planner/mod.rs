//! The stochastic planner: minimum expected number of reference points and
//! the adaptive measurement policy, plus plan realization and an independent
//! expectimax oracle.

mod config;
mod oracle;
mod realize;
pub(crate) mod solver;
mod state;

pub use config::PlannerConfig;
pub use oracle::oracle_expectimax;
pub use realize::{realize_on_state_path, realize_plan, Partition};
pub use solver::{
    solve, value_type1, value_type2, value_type3, BlockDecisionDoc, Expectation, Plan, PlanDoc,
    Solver,
};
pub use state::{BlockKind, BlockState, Decision};
