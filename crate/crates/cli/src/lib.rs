//! Experiment runner library: configuration parsing, sweep execution,
//! result serialization, and DOT export. The `tanglesim` binary is a thin
//! wrapper over these.

pub mod config;
pub mod dot;
pub mod runner;

pub use config::{parse_config, render_config, ConfigError, ExperimentSpec};
pub use dot::export_dot;
pub use runner::{run_experiment, RunError};
