use std::process::ExitCode;

use clap::Parser;

use pathtune_cli::{Cli, Status};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match pathtune_cli::run(&cli) {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::Collision) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
