//! Experiment runner and command-line interface for the localizable
//! entanglement simulations.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod table;

pub use cli::cli_main;
pub use config::{ExperimentConfig, ExperimentKind, Format, Grid};
pub use error::{Error, Result};
pub use table::{Table, Value, SCHEMA_VERSION};
