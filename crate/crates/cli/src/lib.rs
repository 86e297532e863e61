//! Experiment runner behind the `aqpu` binary. Every run writes one CSV and a
//! JSON summary, and is byte-for-byte reproducible from (config, seed).

pub mod config;
mod experiments;

use std::fmt;
use std::path::{Path, PathBuf};

use aqpu_core::export::CsvTable;
use aqpu_core::AqpuError;
use serde_json::{json, Value};

pub use config::{Cli, ClockConfig, Command, Experiment, ExperimentConfig, Flags};

pub const SUMMARY_SCHEMA_VERSION: &str = "1";

#[derive(Debug)]
pub enum CliError {
    /// Bad input; `field` names the offending setting. Exit code 2.
    Config { field: String, message: String },
    /// Numerical failure. Exit code 1.
    Solver(AqpuError),
    /// Output could not be written. Exit code 1.
    Io(String),
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config { field: field.into(), message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            Self::Solver(_) | Self::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config { field, message } => write!(f, "config error in '{field}': {message}"),
            Self::Solver(AqpuError::Solver { time, reason }) => write!(f, "solver failed at t = {time}: {reason}"),
            Self::Solver(e) => write!(f, "solver failed: {e}"),
            Self::Io(m) => write!(f, "cannot write output: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<AqpuError> for CliError {
    fn from(e: AqpuError) -> Self {
        match e {
            AqpuError::Io(m) => Self::Io(m),
            other => Self::Solver(other),
        }
    }
}

/// Result of one experiment before it is written out.
#[derive(Clone, Debug)]
pub struct Report {
    pub experiment: Experiment,
    pub seed: u64,
    pub solver: String,
    pub table: CsvTable,
    pub metrics: Value,
}

impl Report {
    pub fn summary(&self) -> Value {
        json!({
            "experiment": self.experiment.name(),
            "seed": self.seed,
            "solver": self.solver,
            "metrics": self.metrics,
            "versions": { "spec": SUMMARY_SCHEMA_VERSION, "aqpu": env!("CARGO_PKG_VERSION") },
        })
    }
}

/// Runs the experiment described by `config` (its `experiment` field must be set).
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report, CliError> {
    let kind = config.experiment.ok_or_else(|| CliError::config("experiment", "missing experiment kind"))?;
    experiments::run(kind, config)
}

pub fn default_out(kind: Experiment) -> PathBuf {
    PathBuf::from(format!("{}.csv", kind.name()))
}

/// Writes the CSV and the summary; returns the summary path.
pub fn write_outputs(report: &Report, out: &Path, summary: Option<&Path>) -> Result<PathBuf, CliError> {
    report.table.write(out)?;
    let path = summary.map(Path::to_path_buf).unwrap_or_else(|| out.with_extension("json"));
    let text = serde_json::to_string_pretty(&report.summary()).map_err(|e| CliError::Io(e.to_string()))? + "\n";
    std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// Full command-line entry point.
pub fn run_cli(cli: &Cli) -> Result<Report, CliError> {
    let kind = cli.command.kind();
    let config = ExperimentConfig::resolve(kind, cli.command.flags())?;
    let report = run_experiment(&config)?;
    let out = config.out.clone().unwrap_or_else(|| default_out(kind));
    write_outputs(&report, &out, config.summary.as_deref())?;
    Ok(report)
}

/// Worker count from AQPU_THREADS; None means rayon's default.
pub fn thread_count(value: Option<&str>) -> Result<Option<usize>, CliError> {
    match value {
        None => Ok(None),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::config("AQPU_THREADS", format!("expected a positive integer, got '{v}'"))),
        },
    }
}
