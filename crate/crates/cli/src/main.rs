use std::process::ExitCode;

use clap::Parser;
use optsample_cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("OPTSAMPLE_LOG", "warn")).init();
    ExitCode::from(run(Cli::parse()))
}
