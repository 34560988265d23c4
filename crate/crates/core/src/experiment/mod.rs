//! Configuration, stage orchestration and report emission.

mod config;
mod pipeline;
mod report;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{ExperimentConfig, LlmChoice};
pub use pipeline::{
    gen_dk, load_json, prepare_data, run_all, run_ml_baselines, run_prompt_grid, save_json, DkBundle, GridCell,
    GridResults, MlResults, MlRow, Paths, PreparedData, RunOptions, Runner,
};
pub use report::{build_report, ReportKind, ReportRow, ReportTable, REPORT_HEADERS};

use crate::data::DataError;
use crate::dk::DkError;
use crate::llm::LlmError;
use crate::metrics::MetricsError;
use crate::models::ModelError;
use crate::prompt::PromptError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot decode {path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("{stage} output not found at {path}; run that stage first")]
    MissingStage { stage: &'static str, path: PathBuf },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dk(#[from] DkError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("grid stopped after {completed} of {total} prompts: {source}")]
    Incomplete {
        completed: usize,
        total: usize,
        #[source]
        source: LlmError,
    },
}

impl ExperimentError {
    /// Process exit status: 1 for invalid input or configuration, 2 for a
    /// transport failure before any prompt completed, 3 for a partial grid
    /// that can be resumed from the response cache.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Llm(e) if e.is_transport() => 2,
            ExperimentError::Incomplete { completed, .. } if *completed > 0 => 3,
            ExperimentError::Incomplete { source, .. } if source.is_transport() => 2,
            _ => 1,
        }
    }
}
