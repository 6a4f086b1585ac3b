//! Command-line driver: configuration, point-cloud files and the
//! `simulate`, `sweep`, `project`, `fuse` and `init-weights` commands.

pub mod args;
pub mod config;
pub mod error;
pub mod fuse;
pub mod output;
pub mod ply;
pub mod project;
pub mod simulate;

use args::{Cli, Command};
use error::{CliResult, Failure};

/// Runs one command, printing a short report to stdout.
pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => {
            let config = config::resolve_run(&a.run, &a.projection)?;
            let meta = simulate::cmd_simulate(&config)?;
            println!("{}", simulate::summary(&meta, &config.out));
        }
        Command::Sweep(a) => {
            let azimuths = config::parse_sweep(&a.sweep)?;
            let config = config::resolve_run(&a.run, &a.projection)?;
            let mut first_failure: Option<Failure> = None;
            for item in simulate::cmd_sweep(&config, &azimuths)? {
                match item.result {
                    Ok(meta) => println!("{}", simulate::summary(&meta, &config.out)),
                    Err(e) => {
                        eprintln!("azimuth {}: {e}", item.azimuth_deg);
                        first_failure.get_or_insert(e);
                    }
                }
            }
            if let Some(e) = first_failure {
                return Err(e.context("sweep finished with failures"));
            }
        }
        Command::Project(a) => {
            let (path, meta) = project::cmd_project(&a)?;
            println!("{} points -> {}", meta.points, path.display());
        }
        Command::Fuse(a) => {
            let out = fuse::cmd_fuse(&a)?;
            println!(
                "{} row(s) fused -> {}, {}",
                out.metadata.rows,
                out.features.display(),
                out.gate.display()
            );
        }
        Command::InitWeights(a) => {
            fuse::cmd_init_weights(&a)?;
            println!("weights written to {}", a.out.display());
        }
    }
    Ok(())
}
