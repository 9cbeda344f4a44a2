//! Experiment harness around `gqml-core`: configuration, seeded trial
//! orchestration, CSV records and model file formats.

pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod records;
pub mod seeds;

pub use config::{Experiment, ExperimentConfig, ModelKind};
pub use error::{Result, WorkbenchError};
pub use experiments::{run, run_fig3, run_fig4, run_fig5, run_oracle_check, OracleReport, RunOutput};
pub use records::{emit_csv, read_csv, summarize, RunRecord};
