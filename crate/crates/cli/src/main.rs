//! `dfp`: run scenarios, evaluate the security model and print schedules.

mod overrides;
mod run;
mod security;
mod schedule;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Error carrying the process exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    /// Bad input: malformed config, unknown field, invalid parameter.
    pub fn input(message: impl fmt::Display) -> Self {
        Self {
            code: 2,
            message: message.to_string(),
        }
    }

    /// A scenario broke a protocol invariant.
    pub fn invariant(message: impl fmt::Display) -> Self {
        Self {
            code: 3,
            message: message.to_string(),
        }
    }

    pub fn io(message: impl fmt::Display) -> Self {
        Self {
            code: 1,
            message: message.to_string(),
        }
    }
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::io(e)
    }
}

#[derive(Parser)]
#[command(name = "dfp", version, about = "Dynamic fraud-proof finality toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file, optionally over a parameter sweep.
    Run(run::RunArgs),
    /// Closed-form and Monte Carlo challenge probability.
    Security(security::SecurityArgs),
    /// Window durations and sign-off thresholds per extension step.
    Schedule(schedule::ScheduleArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run::cmd_run(&args),
        Command::Security(args) => security::cmd_security(&args),
        Command::Schedule(args) => schedule::cmd_schedule(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
