mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;
use mvpoisson_core::Error;

use config::{Cli, Command, ExperimentConfig};

/// Exit codes: 1 I/O, 2 usage or parameters, 3 resource caps, 4 invariant or
/// model failures.
#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parameter(_) | Error::Parse { .. } => 2,
            Error::Resource { .. } => 3,
            Error::Model(_) | Error::Invariant(_) => 4,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = ExperimentConfig::resolve(cli.command, cli.opts)?;
    let report = match cfg.command {
        Command::PatternInfo => commands::pattern_info(&cfg)?,
        Command::BoundGraph => commands::bound_graph(&cfg)?,
        Command::Simulate => commands::simulate(&cfg)?,
        Command::RateSweep => commands::rate_sweep_cmd(&cfg)?,
        Command::BoundUrn => commands::bound_urn(&cfg)?,
        Command::VerifyCoupling => commands::verify_coupling(&cfg)?,
    };
    output::emit(&report, cfg.format, cfg.out.as_deref())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
