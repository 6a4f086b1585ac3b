use std::process::ExitCode;

use clap::Parser;
use sarprior_cli::args::Cli;

fn main() -> ExitCode {
    match sarprior_cli::run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("sarprior: {failure}");
            ExitCode::from(failure.category.exit_code())
        }
    }
}
