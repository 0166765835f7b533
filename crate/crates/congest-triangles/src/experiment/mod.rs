//! Batch drivers: build instances, run algorithms under the simulator,
//! cross-check against the brute-force oracle, and aggregate statistics
//! into machine-readable reports.
//!
//! Reports serialize to JSON with a fixed field order, so re-running the
//! same configuration reproduces them byte for byte. Scaling tables also
//! render as CSV.

mod config;
mod lemma_report;
mod runner;
mod scaling;
pub mod stats;

pub use config::{AlgoKind, ExperimentConfig, InstanceConfig, InstanceKind};
pub use lemma_report::{verify_lemmas, LemmaCheck, LemmaConfig, LemmaReport};
pub use runner::{run_experiment, ExperimentReport, HeaviestNode, RoundStats, SuccessStats, TrialReport};
pub use scaling::{scaling_study, ScalingConfig, ScalingRow, ScalingTable};

use crate::graph::GraphError;
use crate::sim::SimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("instance generation failed: {0}")]
    Instance(#[from] GraphError),
    #[error("hard invariant violated: {0}")]
    Invariant(#[from] SimError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl ExperimentError {
    /// Process exit code contract: 0 all checks passed, 1 statistical
    /// check failed, 2 hard invariant violated, 3 configuration error.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Invariant(_) => 2,
            _ => 3,
        }
    }
}
