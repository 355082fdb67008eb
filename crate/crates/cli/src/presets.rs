//! Named configurations for the standard experiments. Physical parameters
//! follow the reference figures; replica counts are sized for a desktop.

use std::path::PathBuf;

use crate::config::{Engine, ExperimentConfig, InitSpec, Kind};

pub const PRESETS: [&str; 6] = [
    "fig2-coarsening",
    "fig5-adiabatic",
    "fig7-curvature",
    "fig8-shrink",
    "fig9-committed",
    "terminal-census",
];

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("unknown preset `{name}`; valid presets: {}", PRESETS.join(", "))]
pub struct UnknownPreset {
    pub name: String,
}

/// Disk of radius 0.325 centered on the torus.
const SHRINK_DISK: InitSpec = InitSpec::Disk { cx: 0.5, cy: 0.5, radius: 0.325 };

pub fn preset(name: &str) -> Result<ExperimentConfig, UnknownPreset> {
    let base = ExperimentConfig { out: PathBuf::from(name), ..ExperimentConfig::default() };
    let cfg = match name {
        "fig2-coarsening" => ExperimentConfig {
            kind: Kind::Correlation,
            engine: Engine::Micro,
            n: 100_000,
            radius: 0.01,
            t_max: 400.0,
            snapshots: vec![30.0, 50.0, 100.0, 200.0, 400.0],
            bin_width: Some(0.005),
            n_samples: 2_000_000,
            replicas: 4,
            ..base
        },
        "fig5-adiabatic" => ExperimentConfig {
            kind: Kind::RunMicro,
            n: 100_000,
            radius: 0.01,
            t_max: 100.0,
            snapshots: vec![10.0, 20.0, 50.0, 100.0],
            ..base
        },
        "fig7-curvature" => ExperimentConfig {
            kind: Kind::Boundary,
            radius: 0.05,
            grid: 512,
            initializer: SHRINK_DISK,
            t_max: 400.0,
            snapshots: (0..=20).map(|k| 20.0 * k as f64).collect(),
            ..base
        },
        "fig8-shrink" => ExperimentConfig {
            kind: Kind::Shrink,
            radius: 0.05,
            grid: 512,
            initializer: SHRINK_DISK,
            t_max: 400.0,
            degrees: vec![78.5, 157.0],
            replicas: 4,
            ..base
        },
        "fig9-committed" => ExperimentConfig {
            kind: Kind::CommittedSweep,
            alpha: 0.9,
            degrees: vec![15.0, 25.0, 50.0],
            sizes: vec![2000, 4000],
            q_values: vec![0.05, 0.055, 0.06, 0.063, 0.066, 0.069, 0.072, 0.08, 0.09, 0.1, 0.12],
            replicas: 20,
            t_max: 100_000.0,
            ..base
        },
        "terminal-census" => ExperimentConfig {
            kind: Kind::TerminalCensus,
            engine: Engine::Meanfield,
            radius: 0.05,
            grid: 128,
            dt: 0.1,
            sample_every: 10.0,
            t_max: 3000.0,
            replicas: 100,
            ..base
        },
        _ => return Err(UnknownPreset { name: name.to_string() }),
    };
    Ok(cfg)
}
