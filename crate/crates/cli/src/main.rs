//! `perturbench` command-line interface.
//!
//! Exit codes: 0 success, 1 runtime or data error, 2 usage error.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;

/// Why a command failed; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Run(perturbench::Error),
}

impl From<perturbench::Error> for Failure {
    fn from(e: perturbench::Error) -> Self {
        Failure::Run(e)
    }
}

pub fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            let mut msg = e.to_string();
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                let text = s.to_string();
                if !msg.contains(&text) {
                    msg.push_str(": ");
                    msg.push_str(&text);
                }
                src = s.source();
            }
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
