//! The `routekd` pipeline: configuration, manifests and the stage commands.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;

pub use config::{RunConfig, CONFIG_ENV};
pub use error::CliError;
pub use pipeline::{run_all, run_experiment, run_sweep, Command, Experiment};
