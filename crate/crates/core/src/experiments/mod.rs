//! Experiment pipelines: scaling sweeps with log-log fits, `opt` tables and
//! deterministic CSV/JSON reports.

mod opt_table;
mod report;
mod scaling;

use std::path::PathBuf;

use thiserror::Error;

use crate::engine::EngineError;
use crate::sign_game::SignGameError;

pub use opt_table::{opt_table, OptRow, OptTable};
pub use report::{
    format_sig6, output_path, read_scaling_json, write_scaling_csv, write_scaling_json, write_summaries_csv,
    LabeledScaling, ReportFormat, OUT_DIR_ENV,
};
pub use scaling::{
    bootstrap_ci, fit_exponent, scaling_experiment, scaling_from_samples, Fit, ScalingOptions, ScalingPoint,
    ScalingResult,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    SignGame(#[from] SignGameError),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
