//! Experiment driver: builds a world from an [`ExperimentConfig`], runs the
//! online protocol, and reports metrics.

mod config;
mod record;
mod run;

use thiserror::Error;

pub use config::{load_config, ExperimentConfig, NoiseSpec, QuerySpec, WStarMode, KEYS};
pub use record::{
    check_prefix_means, read_records, write_record, CsvSink, KahanSum, RunRecord, CSV_HEADER,
};
pub use run::{
    ln_ln_slope, run_batch, run_online, run_online_with, run_scaling, BatchReport, RunSummary,
    ScalingPoint, ScalingReport, Simulation,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Protocol(#[from] crate::Error),
}

impl HarnessError {
    /// Whether the failure stems from the configuration rather than the run.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            HarnessError::Parse { .. } | HarnessError::UnknownKey { .. } | HarnessError::Invalid { .. }
        )
    }
}
