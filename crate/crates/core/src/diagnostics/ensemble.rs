use rayon::prelude::*;
use serde::Serialize;

use super::trajectory::{run_trajectory, RunSpec, TrajectoryRecord};
use super::DiagnosticsError;
use crate::rng::rng_substream;

/// Cross-run mean and 10/50/90 % quantiles of one series, row by row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesStats {
    pub mean: Vec<f64>,
    pub q10: Vec<f64>,
    pub q50: Vec<f64>,
    pub q90: Vec<f64>,
}

/// Aggregates over the runs that did not diverge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub n: Vec<u64>,
    pub runs: u64,
    pub diverged: u64,
    pub g: SeriesStats,
    pub grad_sq: SeriesStats,
    pub dist_j: SeriesStats,
    pub v_sq: Option<SeriesStats>,
    pub s: Option<SeriesStats>,
    pub cum_eps_grad_sq: SeriesStats,
    pub cum_grad_sq: SeriesStats,
    pub cum_v_sq: Option<SeriesStats>,
    pub cum_adagrad_ratio: Option<SeriesStats>,
}

impl EnsembleSummary {
    pub fn completed(&self) -> u64 {
        self.runs - self.diverged
    }

    pub fn diverged_fraction(&self) -> f64 {
        self.diverged as f64 / self.runs as f64
    }
}

/// Runs `runs` independent trajectories, run `i` drawing from
/// `rng_substream(base_seed, i)`. Results come back in run-index order.
pub fn run_ensemble_records(spec: &RunSpec<'_>, runs: u64, base_seed: u64) -> Result<Vec<TrajectoryRecord>, DiagnosticsError> {
    if runs < 2 {
        return Err(DiagnosticsError::TooFewRuns(runs));
    }
    (0..runs)
        .into_par_iter()
        .map(|i| run_trajectory(spec, &mut rng_substream(base_seed, i)))
        .collect()
}

pub fn run_ensemble(spec: &RunSpec<'_>, runs: u64, base_seed: u64) -> Result<EnsembleSummary, DiagnosticsError> {
    summarize(&run_ensemble_records(spec, runs, base_seed)?)
}

/// Row-wise statistics over non-diverged records, reduced in record order.
pub fn summarize(records: &[TrajectoryRecord]) -> Result<EnsembleSummary, DiagnosticsError> {
    let runs = records.len() as u64;
    let kept: Vec<&TrajectoryRecord> = records.iter().filter(|r| !r.status.is_diverged()).collect();
    if kept.is_empty() {
        return Err(DiagnosticsError::AllDiverged(runs));
    }
    let n = kept[0].n.clone();
    if kept.iter().any(|r| r.n != n) {
        return Err(DiagnosticsError::Invalid("records do not share a row layout".into()));
    }
    let opt = |f: fn(&TrajectoryRecord) -> Option<&Vec<f64>>| -> Option<SeriesStats> {
        let cols: Option<Vec<&Vec<f64>>> = kept.iter().map(|r| f(r)).collect();
        cols.map(|c| stats(&c))
    };
    let req = |f: fn(&TrajectoryRecord) -> &Vec<f64>| -> SeriesStats {
        let cols: Vec<&Vec<f64>> = kept.iter().map(|r| f(r)).collect();
        stats(&cols)
    };
    Ok(EnsembleSummary {
        n,
        runs,
        diverged: runs - kept.len() as u64,
        g: req(|r| &r.g),
        grad_sq: req(|r| &r.grad_sq),
        dist_j: req(|r| &r.dist_j),
        v_sq: opt(|r| r.v_sq.as_ref()),
        s: opt(|r| r.s.as_ref()),
        cum_eps_grad_sq: req(|r| &r.cum_eps_grad_sq),
        cum_grad_sq: req(|r| &r.cum_grad_sq),
        cum_v_sq: opt(|r| r.cum_v_sq.as_ref()),
        cum_adagrad_ratio: opt(|r| r.cum_adagrad_ratio.as_ref()),
    })
}

fn stats(columns: &[&Vec<f64>]) -> SeriesStats {
    let rows = columns[0].len();
    let count = columns.len() as f64;
    let mut out = SeriesStats {
        mean: Vec::with_capacity(rows),
        q10: Vec::with_capacity(rows),
        q50: Vec::with_capacity(rows),
        q90: Vec::with_capacity(rows),
    };
    let mut buf = Vec::with_capacity(columns.len());
    for k in 0..rows {
        buf.clear();
        buf.extend(columns.iter().map(|c| c[k]));
        out.mean.push(buf.iter().sum::<f64>() / count);
        buf.sort_by(f64::total_cmp);
        out.q10.push(quantile_sorted(&buf, 0.1));
        out.q50.push(quantile_sorted(&buf, 0.5));
        out.q90.push(quantile_sorted(&buf, 0.9));
    }
    out
}

/// Linear interpolation between order statistics (the "type 7" estimator).
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}
