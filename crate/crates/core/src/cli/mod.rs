//! Config-driven experiment runner behind the `idfield` binary.

mod config;
mod output;
mod runner;

pub use config::{
    CharacteristicsConfig, DomainConfig, ExperimentConfig, ExperimentKind, KernelConfig, KernelPreset, Model, ScalarConfig,
    ScalarFamily, EXPERIMENT_NAMES,
};
pub use output::{emit_report, write_report, OutputFormat, CSV_HEADER};
pub use runner::run_experiment;
