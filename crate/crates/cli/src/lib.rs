//! Library behind the `disparity` command-line tool.
//!
//! The binary is a thin argument parser; everything it does is callable
//! from here. [`input`] loads CSV datasets (scored records or
//! pre-aggregated counts), [`analysis`] turns a loaded dataset into a
//! [`report::DisparityReport`] with noise-corrected disparity estimates and
//! bootstrap intervals, and [`report`] renders reports and simulation
//! results as JSON or CSV.

#![forbid(unsafe_code)]

use std::path::PathBuf;

use thiserror::Error;

pub mod analysis;
pub mod input;
pub mod report;

pub use analysis::{run_analysis, AnalysisRequest};
pub use input::{load_input, InputFormat, LoadedInput};
pub use report::{AnalysisSection, DisparityReport, OutputFormat};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{path}:{line}: {message}")]
    Malformed { path: PathBuf, line: u64, message: String },
    #[error("no data in {path}")]
    NoData { path: PathBuf },
    #[error("{path}: missing required column {column:?}")]
    MissingColumn { path: PathBuf, column: String },
    #[error("at least one base metric is required for records input (pass --metric)")]
    NoBaseMetrics,
    #[error("at least one group-by column list is required for records input (pass --group-by)")]
    NoGrouping,
    #[error("at least one disparity summary is required")]
    NoMetaMetrics,
    #[error("analysis of {metric} grouped by {grouping} failed: {source}")]
    Analysis {
        metric: String,
        grouping: String,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error(transparent)]
    Bootstrap(#[from] disparity_core::BootstrapError),
    #[error(transparent)]
    Simulation(#[from] disparity_core::SimulationError),
}
