use std::process::ExitCode;

use bfpm_cli::{Cli, config::SEED_ENV};
use clap::Parser;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let env_seed = std::env::var(SEED_ENV).ok();
    match bfpm_cli::run(&cli, env_seed.as_deref()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bfpm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
