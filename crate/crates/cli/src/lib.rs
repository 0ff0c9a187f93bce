//! Command-line front end: experiment presets, CSV output and reports.

pub mod config;
pub mod error;
pub mod output;
pub mod summarize;
pub mod theory_report;

pub use config::{ExperimentConfig, Preset};
pub use error::{CliError, Result};
pub use output::{run_and_emit, RunOutput};
pub use summarize::{summarize, Summary};
