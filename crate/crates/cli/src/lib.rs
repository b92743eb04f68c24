//! The `hnbody` command-line front end: a strict JSON configuration, one
//! function per subcommand, canonical JSON reports.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{run, Command, Output, Overrides};
pub use config::RunConfig;
pub use error::CliError;
