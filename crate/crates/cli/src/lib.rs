//! File formats and command-line front end for `jps-core`.
//!
//! Subcommands read a panel CSV, an edge-list CSV and a flat dotted-key
//! config, and write plot-ready CSV grids plus JSON summaries.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod io;

pub use commands::{run, Command};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
