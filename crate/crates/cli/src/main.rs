//! `binpath` command-line front end.
//!
//! Exit codes: 0 on success, 2 on usage errors, 3 when the engine rejects
//! the inputs.

mod args;
mod commands;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Engine(binpath::Error),
}

impl From<binpath::Error> for CliError {
    fn from(e: binpath::Error) -> Self {
        CliError::Engine(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Engine(_) => 3,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Price(a) => commands::price(a),
        Command::Study(a) => commands::study(a),
        Command::Bench(a) => commands::bench(a),
    };
    match result {
        Ok(text) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            match &err {
                CliError::Usage(msg) => eprintln!("error: {msg}"),
                CliError::Engine(e) => eprintln!("error: {e}"),
            }
            ExitCode::from(err.exit_code())
        }
    }
}
