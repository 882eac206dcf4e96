//! Experiment harness: configuration, replica fan-out, velocity and scaling
//! fits, bound comparisons and plots.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;

pub mod analysis;
pub mod config;
pub mod experiment;
pub mod plot;

pub use analysis::{
    compare_to_bound, estimate_velocity, fit_scaling_exponent, BoundReport, FinalRadii, FitWindow, ScalingFit,
    VelocityEstimate,
};
pub use config::{ConfigError, ExperimentConfig, Model};
pub use experiment::{analyze_run, run_experiment, RunOutcome, RunSummary};
pub use plot::emit_plots;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] rbfront_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing {}", .0.display())]
    Missing(PathBuf),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => EXIT_CONFIG,
            HarnessError::Core(rbfront_core::Error::InvalidConfig(_)) => EXIT_CONFIG,
            _ => EXIT_FAILURE,
        }
    }
}
