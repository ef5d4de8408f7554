//! Command-line front end: load, normalise, run, analyse, report.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{Cli, Command, Settings};
pub use error::CliError;

/// Resolves settings for `cli` and runs its command.
pub fn run(cli: &Cli, env_seed: Option<&str>) -> Result<(), CliError> {
    let settings = Settings::resolve(&cli.opts, env_seed)?;
    commands::run_and_write(&cli.command, &settings)
}
