//! Experiment driver for the ngtorus simulation suite: configuration,
//! presets, one pipeline per experiment kind, and reproducible output
//! directories with manifests.

pub mod config;
pub mod experiments;
pub mod output;
pub mod presets;

pub use config::{ConfigError, Engine, ExperimentConfig, InitSpec, Kind};
pub use experiments::{run_pipeline, Report};
pub use output::{replay, run_experiment, Outcome, MANIFEST_NAME, OUTPUT_ROOT_ENV};
pub use presets::{preset, PRESETS};
