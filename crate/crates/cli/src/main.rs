//! `biharm`: deterministic verification reports over the built-in catalog.
//!
//! Exit codes: 0 when every observed verdict matches the catalog's expected
//! claim, 1 on a mismatch, 2 on usage or evaluation errors.

mod args;
mod json;
mod report;
mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Engine(#[from] biharm_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let out: Box<dyn Write> = match cli.command.out() {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let mut out = out;
    let matched = match cli.command {
        Command::List(a) => {
            report::list(&a, &mut out)?;
            true
        }
        Command::Check(a) => {
            let doc = report::check(&a.run)?;
            if a.run.json {
                json::write(&mut out, &doc)?;
            } else {
                table::check(&mut out, &doc)?;
            }
            doc.matches
        }
        Command::Sweep(a) => {
            let doc = report::sweep(&a)?;
            if a.run.json {
                json::write(&mut out, &doc)?;
            } else {
                table::sweep(&mut out, &doc)?;
            }
            doc.matches
        }
    };
    out.flush()?;
    Ok(matched)
}

fn main() -> ExitCode {
    // clap exits with status 2 on malformed arguments
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
