//! Command-line frontend for `pgcg-core`: scenario files, subcommands and the
//! JSON/CSV outputs they emit.

pub mod bundled;
pub mod commands;
pub mod error;
pub mod report;
pub mod scenario;
pub mod sweep;

pub use commands::{execute, run_from, Cli, Outcome};
pub use error::{exit, CliError};
pub use scenario::{load_scenario, parse_scenario, Scenario};
