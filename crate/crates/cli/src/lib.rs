//! Library half of the `partsel` binary: argument types, report schemas and
//! the four subcommands, kept here so they can be tested without spawning
//! processes.

pub mod args;
pub mod commands;
mod error;
pub mod report;

use std::fs;
use std::io::{self, Write};
use std::path::Path;

pub use error::CliError;

use args::{Cli, Command};
use commands::ConversionRow;

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display()))),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Data(format!("stdout: {e}"))),
    }
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Runs a parsed command, writing its output.
pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(a) => {
            let report = commands::cmd_run(&a)?;
            emit(a.out.as_deref(), &json(&report))
        }
        Command::Generate(a) => {
            let summary = commands::cmd_generate(&a)?;
            eprintln!("wrote {} users, {} observations", summary.users, summary.observations);
            Ok(())
        }
        Command::Convert(a) => {
            let row = commands::cmd_convert(&a)?;
            if a.json {
                emit(None, &json(&row))
            } else {
                emit(None, &format!("{}\n{}\n", ConversionRow::HEADER, row.table_line()))
            }
        }
        Command::Sweep(a) => {
            let rows = commands::cmd_sweep(&a)?;
            emit(a.out.as_deref(), &report::reports_to_csv(&rows)?)
        }
    }
}
