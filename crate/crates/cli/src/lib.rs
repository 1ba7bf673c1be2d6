//! Configuration, orchestration and report emission for the `hessian-lab`
//! command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{run, Command, RunOptions};
pub use config::{ExperimentConfig, RunConfig};
pub use error::CliError;
pub use report::RunReport;
