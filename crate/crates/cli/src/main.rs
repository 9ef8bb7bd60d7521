mod args;
mod config;
mod error;
mod exec;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use args::Cli;
use config::{CommandKind, RunConfig};
use error::{CliError, ExitStatus};
use exec::Outcome;

/// Version of the JSON report layout.
const SCHEMA_VERSION: u32 = 1;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { ExitStatus::Invalid.code() } else { ExitStatus::Holds.code() };
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("tgraph: {e}");
            ExitCode::from(e.status().code())
        }
    }
}

fn run(cli: Cli) -> Result<ExitStatus, CliError> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Threads(e.to_string()))?;
    }
    let config = cli.command.into_config()?;
    let (config, outcome) = exec::execute(config)?;
    emit(&config, &outcome)?;
    Ok(outcome.status)
}

fn report_json(config: &RunConfig, outcome: &Outcome) -> String {
    let timestamp = OffsetDateTime::now_utc().format(&Rfc3339).unwrap_or_default();
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "tool": "tgraph",
        "version": tangent_graphs::VERSION,
        "timestamp": timestamp,
        "status": outcome.status.as_str(),
        "config": config,
        "result": outcome.result,
    });
    let mut text = serde_json::to_string_pretty(&report).expect("reports serialize");
    text.push('\n');
    text
}

/// Writes the report: CSV for `extract`, JSON otherwise, to `out` or stdout.
/// With `out` set, `extract` prints its JSON summary; `zoo list` always
/// prints a plain listing.
fn emit(config: &RunConfig, outcome: &Outcome) -> Result<(), CliError> {
    let body = match (config.command, &outcome.csv) {
        (CommandKind::Extract, Some(csv)) => csv.clone(),
        _ => report_json(config, outcome),
    };
    if config.command == CommandKind::ZooList {
        let mut listing = String::new();
        for e in tangent_graphs::zoo_entries() {
            listing.push_str(&format!("{:<10} {}\n", e.name, e.description));
        }
        write_stdout(&listing)?;
        if let Some(path) = &config.out {
            write_file(path, &body)?;
        }
        return Ok(());
    }
    match &config.out {
        Some(path) => {
            write_file(path, &body)?;
            if config.command == CommandKind::Extract {
                write_stdout(&report_json(config, outcome))?;
            }
        }
        None => write_stdout(&body)?,
    }
    if let (Some(path), Some(csv)) = (&config.csv, &outcome.csv) {
        write_file(path, csv)?;
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source })
}

fn write_stdout(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(CliError::Stdout)
}
