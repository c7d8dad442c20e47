//! File formats, configuration and the experiment driver behind the `fsir`
//! command-line tool.
//!
//! The estimation itself lives in `fsir-core`; this crate reads long-format
//! CSV data, runs the simulation study in parallel and writes machine-readable
//! results.

pub mod config;
pub mod error;
pub mod experiment;
pub mod ingest;
pub mod output;

pub use config::{ExperimentConfig, Mode};
pub use error::{CliError, Result};
pub use experiment::{run_experiment, Report};
pub use ingest::{ingest_csv, read_long_format, write_csv};
