use std::process::ExitCode;

use clap::Parser;

use nsi::app::execute;
use nsi::config::{resolve, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NSI_LOG", "info")).init();
    let cli = Cli::parse();
    match resolve(cli).and_then(|cfg| execute(&cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
