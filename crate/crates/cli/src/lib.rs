//! Config-driven experiment drivers for the `poro` command-line tool.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{cmd_compare, cmd_convergence, cmd_run, cmd_sweep_alpha};
pub use config::{Command, ConfigError, ExperimentConfig};
pub use output::{ResultRow, ResultsTable};
