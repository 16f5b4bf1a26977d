//! Batch front end: configuration parsing, experiment dispatch and CSV/JSON
//! artifacts.

// `!(x > 0.0)` style checks reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod run;

pub use config::{parse_config, ExperimentConfig};
pub use error::CliError;
pub use run::{execute, run, RunOptions, RunReport};
