use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::output::format_f64;
use super::run::{fit_rate, simulate};
use super::CliError;
use crate::diagnostics::{loglog_slope, summarize, time_average_curve, EnsembleSummary, DEFAULT_BURN_IN};
use crate::optimizers::Algorithm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Metric {
    /// Fitted exponent of `ln Ê‖∇g‖²` against `Σ ε_i`.
    DecayExponent,
    /// Mean `d(θ_N, J)` at the final step.
    #[value(name = "final_dist_J", alias = "final_dist_j")]
    FinalDistJ,
    /// Log-log slope of the time-averaged `Ê‖∇g‖²` after burn-in.
    TimeAverageSlope,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::DecayExponent => "decay_exponent",
            Metric::FinalDistJ => "final_dist_J",
            Metric::TimeAverageSlope => "time_average_slope",
        }
    }

    /// Rates are ranked by magnitude, distances by value.
    fn sort_key(self, value: f64) -> f64 {
        match self {
            Metric::DecayExponent | Metric::TimeAverageSlope => value.abs(),
            Metric::FinalDistJ => value,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "decay_exponent" => Ok(Metric::DecayExponent),
            "final_dist_J" | "final_dist_j" => Ok(Metric::FinalDistJ),
            "time_average_slope" => Ok(Metric::TimeAverageSlope),
            other => Err(CliError::Usage(format!("unknown metric `{other}`"))),
        }
    }
}

/// One ranked configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub rank: usize,
    /// Position in the input list.
    pub index: usize,
    pub label: String,
    pub algorithm: &'static str,
    /// Momentum in mSGD form at step 1 (mapped for SHB); absent for AdaGrad.
    pub alpha: Option<f64>,
    /// Step size in mSGD form at step 1 (mapped for SHB); absent for AdaGrad.
    pub epsilon_1: Option<f64>,
    pub diverged: u64,
    pub value: f64,
}

pub fn metric_value(metric: Metric, config: &ExperimentConfig, summary: &EnsembleSummary) -> Result<f64, CliError> {
    match metric {
        Metric::DecayExponent => Ok(fit_rate(config, summary)?.slope),
        Metric::FinalDistJ => Ok(*summary.dist_j.mean.last().expect("summaries have rows")),
        Metric::TimeAverageSlope => {
            let curve = time_average_curve(summary);
            let last = *summary.n.last().expect("summaries have rows") as f64;
            let (ts, ys): (Vec<f64>, Vec<f64>) = summary
                .n
                .iter()
                .zip(&curve)
                .filter(|(&n, &y)| n as f64 >= DEFAULT_BURN_IN * last && y > 0.0)
                .map(|(&n, &y)| (n as f64, y))
                .unzip();
            Ok(loglog_slope(&ts, &ys)?)
        }
    }
}

/// Runs every configuration and ranks them by `metric`, smallest first.
/// Ties keep input order.
pub fn compare(configs: &[(String, ExperimentConfig)], metric: Metric) -> Result<Vec<CompareRow>, CliError> {
    if configs.len() < 2 {
        return Err(CliError::Usage(format!("compare needs ≥ 2 configs, got {}", configs.len())));
    }
    let (_, first) = &configs[0];
    for (label, cfg) in &configs[1..] {
        if cfg.objective != first.objective || cfg.oracle != first.oracle {
            return Err(CliError::Usage(format!("{label}: compared configs must share objective and oracle")));
        }
    }
    let mut rows = Vec::with_capacity(configs.len());
    for (index, (label, cfg)) in configs.iter().enumerate() {
        cfg.validate()?;
        let obj = cfg.objective.build()?;
        let records = simulate(cfg, &obj)?;
        let summary = summarize(&records)?;
        rows.push(CompareRow {
            rank: 0,
            index,
            label: label.clone(),
            algorithm: cfg.algorithm.name(),
            alpha: momentum_at_one(&cfg.algorithm),
            epsilon_1: cfg.algorithm.mapped_epsilon_at(1),
            diverged: summary.diverged,
            value: metric_value(metric, cfg, &summary)?,
        });
    }
    rows.sort_by(|a, b| metric.sort_key(a.value).total_cmp(&metric.sort_key(b.value)));
    for (rank, row) in rows.iter_mut().enumerate() {
        row.rank = rank + 1;
    }
    Ok(rows)
}

fn momentum_at_one(alg: &Algorithm) -> Option<f64> {
    match *alg {
        Algorithm::Msgd { alpha, .. } => Some(alpha),
        _ => alg.momentum_at(1),
    }
}

pub fn compare_csv(rows: &[CompareRow], metric: Metric) -> String {
    let opt = |x: Option<f64>| x.map(format_f64).unwrap_or_default();
    let mut out = format!("rank,index,label,algorithm,alpha,epsilon_1,diverged,{}\n", metric.name());
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.rank,
            r.index,
            r.label.replace(',', ";"),
            r.algorithm,
            opt(r.alpha),
            opt(r.epsilon_1),
            r.diverged,
            format_f64(r.value)
        ));
    }
    out
}
