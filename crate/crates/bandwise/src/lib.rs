//! File formats, configuration and experiment orchestration for
//! `bandwise-core`.
//!
//! An experiment directory holds `config.txt`, `trace.csv`, `models/`, and
//! the result tables `training.csv`, `forecast_errors.csv`, `frames.csv`,
//! `summary.csv` and `cdf.csv`. All CSVs have a header row, `.` decimals and
//! LF line endings; floats are written in their shortest exact form.

pub mod config;
pub mod error;
pub mod experiment;
pub mod model_file;
pub mod trace_csv;

pub use self::config::{ExperimentConfig, ModelKind, PolicyKind};
pub use self::error::{HarnessError, Result};
pub use self::experiment::{generate, report, run, run_all, train, PipelineOutput};
