use std::process::ExitCode;

use clap::Parser;
use interfere_cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match interfere_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace(['\n', '\r'], " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
