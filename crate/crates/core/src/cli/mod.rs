//! Configuration, experiment orchestration and result export for the `lab`
//! binary.
//!
//! An experiment is one TOML document:
//!
//! ```toml
//! horizon = 100000        # steps N (required)
//! runs = 200              # ensemble size R, default 100
//! seed = 0                # base seed, default 0
//! stride = 10             # row thinning, default max(1, N / 10000)
//! theta1 = [0.8]          # default: all ones
//! v0 = [0.0]              # msgd / shb only, default zero
//! output = "results/sin2" # default "results"; `--out` wins
//!
//! objective = "sin2"      # or a table: { id = "quad", c = 2.0, dim = 3 }
//! oracle = { kind = "additive_gaussian", sigma = 0.1 }   # default "exact"
//!
//! [algorithm]
//! kind = "msgd"           # sgd | msgd | shb | adagrad_norm | adagrad_coord
//! alpha = 0.9
//! epsilon = { family = "power", c0 = 0.5, gamma = 1.0, n0 = 0 }   # default 1/n
//!
//! [checks]
//! lemmas = true           # the algorithm's default lemma checks
//! rate_fit = true
//! assumptions = false
//! ```
//!
//! Objectives: `quad {c, dim}`, `sin2`, `cos2`, `quartic`, `plateau`,
//! `finite_sum_quad {centers}`, `finite_sum_quad_hypercube {dim}`. Oracles:
//! `exact`, `additive_gaussian {sigma}`, `finite_sum_uniform`. SHB takes
//! schedules `beta` and `gamma`; AdaGrad takes `alpha0`. Unknown keys are
//! rejected.

mod compare;
mod config;
mod output;
mod run;

use std::path::Path;

use thiserror::Error;

use crate::assumptions::AssumptionError;
use crate::diagnostics::DiagnosticsError;

pub use compare::{compare, compare_csv, metric_value, CompareRow, Metric};
pub use config::{parse_config, Checks, ExperimentConfig, ObjectiveSpec, DEFAULT_RUNS, TARGET_ROWS};
pub use output::{format_f64, to_json, trajectory_csv, trajectory_header};
pub use run::{
    execute, fit_rate_only, fit_step, output_dir, run_experiment, verify_assumptions, ExperimentResult, Failure, FinalRow,
    RunSummary, StatusCounts, SUMMARY_FILE, TRAJECTORY_FILE,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config is not valid TOML: {0}")]
    Parse(String),
    #[error("{key}: {message}")]
    Config { key: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Assumptions(#[from] AssumptionError),
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl ToString) -> Self {
        CliError::Config { key: key.into(), message: message.to_string() }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}
