//! Experiment driver: config parsing, sweep orchestration, CSV output and run manifests.

// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use commands::{cmd_all, cmd_check_ibc, cmd_error_representation, cmd_solve, resolve_workers, Context, WORKERS_ENV};
pub use config::ExperimentConfig;
pub use error::CliError;
pub use manifest::{RunManifest, StageRecord, MANIFEST_FILE};
