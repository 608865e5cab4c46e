//! Configuration, orchestration and file output for the `apcl` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{execute, Command, Outcome};
pub use config::{ConfigError, ExperimentConfig};
