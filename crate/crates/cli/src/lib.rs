//! Experiment harness for the `excbo` engine: TOML configuration, seed
//! sweeps, oracle optima, regret, CSV/JSON outputs and SVG plots.

pub mod config;
pub mod error;
pub mod oracle;
pub mod output;
pub mod plot;
pub mod suite;

pub use config::{parse_config, ExperimentConfig};
pub use error::{Result, RunnerError};
pub use oracle::{compute_regret, estimate_oracle_optimum};
pub use output::{emit_outputs, load_bundle};
pub use suite::{run_suite, BenchmarkProvider, Registry, ResultBundle};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "EXCBO_OUT_DIR";
