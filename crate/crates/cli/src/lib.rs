//! Config-driven experiment runner: reads a TOML experiment description,
//! runs the configured scheme from every initialization (optionally over a
//! parameter sweep), classifies each trajectory and writes per-run files
//! plus a JSON summary.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod output;

pub use commands::{cmd_check, cmd_run, cmd_sweep, CheckReport, Overrides, RunReport};
pub use config::{ExperimentConfig, Format};
pub use error::{CliError, CliResult};
pub use experiment::{execute, execute_sweep, RunSummary};
