//! Config-driven experiment runner for `kscg-core`.

pub mod config;
pub mod runner;

pub use config::{ConfigError, ExperimentKind, ExperimentSpec};
pub use runner::{load_spec, run_file, run_spec, RunError, RunOptions, RunSummary, Sidecar};
