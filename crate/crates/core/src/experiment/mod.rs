//! Experiment configuration and runners.

pub mod config;
pub mod preset;
pub mod runner;
pub mod table;

pub use config::{ExperimentConfig, ExperimentKind};
pub use preset::{preset, PRESETS};
pub use runner::{execute, run, RunError, RunManifest, RunOutput};
pub use table::{Cell, Table};
