//! Experiment registry and artifact writer behind the `sclwp` command.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{ExperimentConfig, REGISTRY};
pub use experiments::{run, Outcome};
pub use output::{run_to_dir, RunReport};
