//! Surrogate networks, the UCB acquisition and the optimization loops.

mod config;
mod network;
mod optimize;
mod run;

pub use config::{AcqOptimizer, BetaSchedule, LoopConfig, PropagationMode};
pub use network::{AcquisitionContext, NodeModel, SurrogateNetwork};
pub use optimize::{maximize_acquisition, optimize_acquisition};
pub use run::{
    baseline_anm_network_run, baseline_ucb_run, excbo_run, run_algorithm, RunTrace, TraceRow, ANM, EXCBO, UCB,
};
