//! Configuration-driven experiment runner for mobile-sensor SHRED.

pub mod commands;
pub mod config;
pub mod manifest;

pub use commands::{
    cmd_baselines, cmd_ensemble, cmd_eval, cmd_generate, cmd_route_table, cmd_sweep, cmd_train, exit_code,
    EnsembleKind, EnsembleOutcome,
};
pub use config::{ExperimentConfig, TrajectorySpec};
pub use manifest::{manifest_file, RunManifest};
