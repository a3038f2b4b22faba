//! `arete` command-line tool.
//!
//! Exit status: 0 on success, 2 when an argument, parameter or input file
//! is rejected, 1 on any other failure.

mod cli;
mod commands;
mod output;

use std::io;
use std::process::ExitCode;

use clap::Parser;

use crate::cli::{Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] arete_core::Error),

    #[error("{0}")]
    Usage(String),

    #[error("cannot read {path}: {source}")]
    Input { path: String, source: io::Error },

    #[error("output failed: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use arete_core::Error as E;
        match self {
            CliError::Core(E::StepMismatch { .. } | E::EmptyShares) | CliError::Io(_) => 1,
            _ => 2,
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let out = output::open(cli.output.as_deref())?;
    match &cli.command {
        Command::Sample(a) => commands::sample(a, out),
        Command::Shares(a) => commands::shares(a, out),
        Command::Density(a) => commands::density(a, out),
        Command::Cdf(a) => commands::cdf(a, out),
        Command::Privacy(a) => commands::privacy(a, out),
        Command::Search(a) => commands::search(a, out),
        Command::Errors(a) => commands::errors(a, out),
        Command::Simulate(a) => commands::simulate(a, out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        // A closed downstream pipe (`arete sample | head`) is not a failure.
        Err(CliError::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if let CliError::Core(arete_core::Error::Domain { .. }) = err {
                eprintln!("hint: pass --permissive to calibrate outside the proven domain");
            }
            log::debug!("{err:?}");
            ExitCode::from(err.exit_code())
        }
    }
}
