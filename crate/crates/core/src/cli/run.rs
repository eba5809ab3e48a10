use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::output::{to_json, trajectory_csv};
use super::CliError;
use crate::assumptions::{build_assumption_report, AssumptionReport, AssumptionSettings};
use crate::diagnostics::{
    fit_decay_exponent_with, run_ensemble_records, run_lemma_checks, summarize, time_average_curve, DiagnosticsError,
    EnsembleSummary, LemmaReport, LemmaThresholds, RateFit, RunSpec, TrajectoryRecord, Verdict, DEFAULT_BURN_IN,
};
use crate::objectives::Objective;
use crate::optimizers::Algorithm;
use crate::status::Outcome;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StatusCounts {
    pub runs: u64,
    pub completed: u64,
    pub diverged: u64,
    pub degenerate: u64,
}

/// Ensemble statistics at the last recorded step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalRow {
    pub n: u64,
    pub mean_g: f64,
    pub median_g: f64,
    pub mean_grad_sq: f64,
    pub mean_dist_j: f64,
    pub median_dist_j: f64,
    pub time_average_grad_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub check: String,
    pub detail: String,
}

/// Everything `summary.json` holds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub status: StatusCounts,
    pub final_row: Option<FinalRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_fit: Option<RateFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemmas: Option<LemmaReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assumptions: Option<AssumptionReport>,
    pub passed: bool,
    pub failures: Vec<Failure>,
    pub config: ExperimentConfig,
}

/// An executed experiment with its rendered artifacts.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub summary: RunSummary,
    pub ensemble: Option<EnsembleSummary>,
    pub csv: String,
    pub json: String,
}

impl ExperimentResult {
    /// 0 when every requested check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.summary.passed {
            0
        } else {
            1
        }
    }
}

/// Step sequence rate fits regress against: the mSGD-form `ε_n`, or `1`
/// per step for AdaGrad, whose step size is random.
pub fn fit_step(alg: &Algorithm) -> impl Fn(u64) -> f64 + '_ {
    move |n| alg.mapped_epsilon_at(n).unwrap_or(1.0)
}

pub(crate) fn simulate(config: &ExperimentConfig, obj: &Objective) -> Result<Vec<TrajectoryRecord>, CliError> {
    let spec = RunSpec {
        objective: obj,
        oracle: config.oracle,
        algorithm: config.algorithm,
        theta1: config.theta1(),
        v0: config.v0(),
        horizon: config.horizon,
        stride: config.stride,
    };
    Ok(run_ensemble_records(&spec, config.runs, config.seed)?)
}

pub(crate) fn fit_rate(config: &ExperimentConfig, summary: &EnsembleSummary) -> Result<RateFit, DiagnosticsError> {
    fit_decay_exponent_with(&summary.n, &summary.grad_sq.mean, fit_step(&config.algorithm), DEFAULT_BURN_IN)
}

fn status_counts(records: &[TrajectoryRecord]) -> StatusCounts {
    let count = |o: Outcome| records.iter().filter(|r| r.status.outcome == o).count() as u64;
    StatusCounts {
        runs: records.len() as u64,
        completed: count(Outcome::Completed),
        diverged: count(Outcome::Diverged),
        degenerate: count(Outcome::Degenerate),
    }
}

fn final_row(s: &EnsembleSummary) -> FinalRow {
    let k = s.n.len() - 1;
    FinalRow {
        n: s.n[k],
        mean_g: s.g.mean[k],
        median_g: s.g.q50[k],
        mean_grad_sq: s.grad_sq.mean[k],
        mean_dist_j: s.dist_j.mean[k],
        median_dist_j: s.dist_j.q50[k],
        time_average_grad_sq: time_average_curve(s)[k],
    }
}

/// Runs the experiment and renders its CSV and JSON without touching disk.
pub fn execute(config: &ExperimentConfig) -> Result<ExperimentResult, CliError> {
    config.validate()?;
    let obj = config.objective.build()?;
    let records = simulate(config, &obj)?;
    let status = status_counts(&records);
    let mut failures = Vec::new();

    let ensemble = match summarize(&records) {
        Ok(s) => Some(s),
        Err(DiagnosticsError::AllDiverged(n)) => {
            failures.push(Failure { check: "ensemble".into(), detail: format!("all {n} runs diverged") });
            None
        }
        Err(e) => return Err(e.into()),
    };

    let rate_fit = match (&ensemble, config.checks.rate_fit) {
        (Some(s), true) => match fit_rate(config, s) {
            Ok(fit) => Some(fit),
            Err(e) => {
                failures.push(Failure { check: "rate_fit".into(), detail: e.to_string() });
                None
            }
        },
        (None, true) => {
            failures.push(Failure { check: "rate_fit".into(), detail: "no completed runs to fit".into() });
            None
        }
        _ => None,
    };

    let lemmas = match config.checks.lemma_selection(&config.algorithm) {
        Some(checks) => {
            let report = run_lemma_checks(&records, &config.algorithm, &checks, &LemmaThresholds::default(), obj.infimum())?;
            for r in report.results.iter().filter(|r| r.verdict != Verdict::Pass) {
                let verdict = if r.verdict == Verdict::Fail { "failed" } else { "inconclusive" };
                failures.push(Failure { check: r.check.name().into(), detail: format!("{verdict}: {}", r.detail) });
            }
            Some(report)
        }
        None => None,
    };

    let assumptions = if config.checks.assumptions {
        let settings = AssumptionSettings { seed: config.seed, ..AssumptionSettings::default() };
        Some(build_assumption_report(&obj, config.oracle, &config.algorithm, &settings)?)
    } else {
        None
    };

    let summary = RunSummary {
        seed: config.seed,
        status,
        final_row: ensemble.as_ref().map(final_row),
        rate_fit,
        lemmas,
        assumptions,
        passed: failures.is_empty(),
        failures,
        config: config.clone(),
    };
    let csv = trajectory_csv(ensemble.as_ref(), config.algorithm.is_adagrad());
    let json = to_json(&summary);
    Ok(ExperimentResult { summary, ensemble, csv, json })
}

/// Where an experiment writes: `--out` if given, else the config's `output`,
/// else `results`.
pub fn output_dir(config: &ExperimentConfig, out: Option<&Path>) -> PathBuf {
    match (out, &config.output) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => PathBuf::from("results"),
    }
}

/// Executes the experiment and writes `trajectory.csv` and `summary.json`
/// into `dir`. Artifacts are written even when checks fail.
pub fn run_experiment(config: &ExperimentConfig, dir: &Path) -> Result<ExperimentResult, CliError> {
    let result = execute(config)?;
    write_artifacts(dir, &[(TRAJECTORY_FILE, &result.csv), (SUMMARY_FILE, &result.json)])?;
    Ok(result)
}

pub(crate) fn write_artifacts(dir: &Path, files: &[(&str, &str)]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}

/// The rate fit alone, for `lab fit-rate`.
pub fn fit_rate_only(config: &ExperimentConfig) -> Result<RateFit, CliError> {
    config.validate()?;
    let obj = config.objective.build()?;
    let summary = summarize(&simulate(config, &obj)?)?;
    Ok(fit_rate(config, &summary)?)
}

/// The assumption report alone, for `lab verify-assumptions`.
pub fn verify_assumptions(config: &ExperimentConfig) -> Result<AssumptionReport, CliError> {
    config.validate()?;
    let obj = config.objective.build()?;
    let settings = AssumptionSettings { seed: config.seed, ..AssumptionSettings::default() };
    Ok(build_assumption_report(&obj, config.oracle, &config.algorithm, &settings)?)
}
