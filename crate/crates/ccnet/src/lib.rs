//! Experiment driver for the `ccnet-core` network model: configuration, a
//! thread-pool trial runner, CSV/JSON output and the operator text format.

pub mod config;
pub mod experiments;
pub mod formats;
pub mod output;
pub mod runner;

use config::ExperimentConfig;
use experiments::{execute, Outcome, RunError};
use serde_json::{json, Value};
use std::path::PathBuf;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Files written by [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub table: PathBuf,
    pub summary: PathBuf,
    pub operator: Option<PathBuf>,
}

/// The `#` header line: enough to rerun the experiment exactly.
pub fn metadata(config: &ExperimentConfig, outcome: &Outcome) -> Value {
    let mut canonical = config.clone();
    canonical.workers = None;
    canonical.out = None;
    canonical.operator_out = None;
    json!({
        "tool": "ccnet",
        "version": VERSION,
        "experiment": config.experiment.name(),
        "config_hash": config.hash(),
        "seed": config.seed,
        "config": canonical,
        "dropped_trials": outcome.dropped,
    })
}

pub fn default_out(config: &ExperimentConfig) -> PathBuf {
    PathBuf::from(format!("{}.csv", config.experiment.name()))
}

/// Validates, runs on a pool of `config.workers` (or the default) threads and
/// writes the CSV table plus a JSON summary next to it (same stem, `.json`).
/// Nothing is written unless the computation finishes; a tolerance failure
/// still writes the data and then reports [`RunError::Numerical`].
pub fn run(config: &ExperimentConfig) -> Result<Artifacts, RunError> {
    config.validate()?;
    let workers = config.workers.unwrap_or_else(runner::default_workers);
    let pool = runner::Parallel::new(workers).map_err(|e| RunError::Config(e.to_string()))?;
    let outcome = execute(config, &pool)?;
    let meta = metadata(config, &outcome);
    let table = config.out.clone().unwrap_or_else(|| default_out(config));
    let summary = table.with_extension("json");
    output::write_atomic(&table, &output::render(&meta, &outcome.table))?;
    let report = json!({ "metadata": meta, "summary": outcome.summary });
    let text = serde_json::to_string_pretty(&report).expect("summary serializes") + "\n";
    output::write_atomic(&summary, &text)?;
    let operator = match (&config.operator_out, &outcome.operator) {
        (Some(path), Some(text)) => {
            output::write_atomic(path, text)?;
            Some(path.clone())
        }
        _ => None,
    };
    if let Some(f) = outcome.failure {
        return Err(RunError::Numerical(f));
    }
    Ok(Artifacts {
        table,
        summary,
        operator,
    })
}
