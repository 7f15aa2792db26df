//! Experiment harness: configuration presets, seed sweeps, learning curves,
//! checkpoints, evaluation, environment cross-checks and reports.

pub mod checkpoint;
pub mod config;
pub mod curve;
pub mod evaluate;
pub mod experiment;
pub mod report;
pub mod xcheck;

pub use checkpoint::Checkpoint;
pub use config::{preset, ExperimentConfig, PRESETS};
