//! Library half of the CLI: argument types, report builders, rendering, and
//! the exit-code contract (0 success, 2 validation, 3 solver, 4 I/O).

pub mod args;
pub mod commands;
pub mod report;

use std::io::Write;

use merton_default::error::Error;

use args::{Cli, Command, OutputArgs, OutputFormat};
use report::Report;

/// Exit code for a library error: validation problems are 2, solver
/// failures 3, I/O and data ingestion 4.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::InvalidParameter(_) | Error::Domain(_) | Error::Inadmissible(_) => 2,
        Error::IllPosed(_) | Error::RootSearch(_) | Error::OdeIntegration(_) => 3,
        Error::Ingestion(_) | Error::Io(_) | Error::Csv(_) => 4,
    }
}

fn build(cli: &Cli) -> Result<(Report, OutputArgs), Error> {
    Ok(match &cli.command {
        Command::Ratio(args) => (commands::cmd_ratio(args)?, args.output.clone()),
        Command::Path(args) => (commands::cmd_path(args)?, args.output.clone()),
        Command::Value(args) => (commands::cmd_value(args)?, args.output.clone()),
        Command::Simulate(args) => (commands::cmd_simulate(args)?, args.output.clone()),
        Command::Estimate(args) => (commands::cmd_estimate(args)?, args.output.clone()),
        Command::Reproduce(args) => (commands::cmd_reproduce(args)?, args.output.clone()),
    })
}

/// Runs a parsed CLI invocation and writes the rendered report.
pub fn run(cli: &Cli) -> Result<(), Error> {
    let (report, output) = build(cli)?;
    let rendered = match output.format {
        OutputFormat::Json => report.to_json(output.precision),
        OutputFormat::Csv => report.to_csv(output.precision),
    };
    match &output.out {
        Some(path) => std::fs::write(path, rendered)?,
        None => std::io::stdout().write_all(rendered.as_bytes())?,
    }
    Ok(())
}
