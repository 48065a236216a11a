//! Command-line front end for the `pv5_jacobi` laboratory.
//!
//! Exit codes: 0 when every required check passes (or none ran), 1 when a
//! required check fails, 2 for usage and configuration errors, 3 for
//! numerical failures and IO errors.

mod commands;
pub mod config;
pub mod report;

use std::fs::File;
use std::path::Path;

use clap::Parser;
use pv5_jacobi::num;
use thiserror::Error;

pub use commands::{Table, Z_SAMPLES};
pub use config::{Cli, Command, RunConfig};
pub use report::{emit_report, load_report, Report, SCHEMA};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] pv5_jacobi::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("report does not match the schema: {0}")]
    Schema(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if !e.is_numerical() => 2,
            _ => 3,
        }
    }
}

/// A finished run before anything is written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub table: Table,
    pub exit: u8,
}

/// Runs the pipeline of `config.command`.
pub fn execute(config: &RunConfig) -> Result<Outcome, CliError> {
    let out = commands::dispatch(config)?;
    let report = Report {
        schema: SCHEMA.to_string(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        command: config.command.name().to_string(),
        params: report::Params {
            alpha: num::to_decimal(&config.alpha),
            k2: num::to_decimal(&config.k2),
            t_grid: config.t_grid.iter().map(num::to_decimal).collect(),
            n_max: config.n_max,
            bits: config.bits(),
            rel_tol: num::to_decimal(&config.ctx.rel_tol),
            suite: config.suite.name().to_string(),
            seed: config.seed,
        },
        checks: out.checks,
        summary: out.summary,
    };
    Ok(Outcome { report, table: out.table, exit: out.exit })
}

pub fn write_csv(table: &Table, path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Executes and writes the JSON report (standard output without
/// `--out-json`) and the CSV table. Returns the exit code.
pub fn run(config: &RunConfig) -> Result<u8, CliError> {
    let outcome = execute(config)?;
    match &config.out_json {
        Some(path) => emit_report(&outcome.report, path)?,
        None => print!("{}", outcome.report.to_json()?),
    }
    if let Some(path) = &config.out_csv {
        write_csv(&outcome.table, path)?;
    }
    Ok(outcome.exit)
}

/// Caps the global thread pool at `PV5_THREADS` when set.
fn configure_threads() {
    let Some(n) = std::env::var("PV5_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) else {
        return;
    };
    if n > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Parses `args`, runs, reports errors on standard error.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    configure_threads();
    let result = RunConfig::from_cli(&cli).and_then(|cfg| run(&cfg));
    match result {
        Ok(code) => {
            if code == 1 {
                eprintln!("pv5-jacobi-lab: a required check failed");
            } else if code == 3 {
                eprintln!("pv5-jacobi-lab: numerical failure, see the report diagnostics");
            }
            code
        }
        Err(e) => {
            eprintln!("pv5-jacobi-lab: {e}");
            e.exit_code()
        }
    }
}
