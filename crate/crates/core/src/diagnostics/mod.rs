//! Trajectories, Monte Carlo ensembles, decay-rate engine and the
//! summability/boundedness check suite.

mod ensemble;
mod lemmas;
mod rate;
mod trajectory;

use thiserror::Error;

use crate::objectives::ObjectiveError;
use crate::oracles::OracleError;

pub use ensemble::{run_ensemble, run_ensemble_records, summarize, EnsembleSummary, SeriesStats};
pub use lemmas::{
    lemma_suite, run_lemma_checks, CheckResult, LemmaCheck, LemmaReport, LemmaThresholds, Verdict,
    INCONCLUSIVE_DIVERGED_FRACTION,
};
pub use rate::{
    classify_time_average_order, compute_p, fit_decay_exponent, fit_decay_exponent_with, loglog_slope,
    plateau_check, predicted_rate_envelope, predicted_time_average_slope, riemann_zeta, time_average,
    time_average_curve, PlateauResult, RateFit, TimeAverageOrder, DEFAULT_BURN_IN,
};
pub use trajectory::{run_trajectory, RunSpec, TrajectoryRecord, LEMMA8_EXPONENT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("stride must be at least 1")]
    ZeroStride,
    #[error("an ensemble needs at least 2 runs, got {0}")]
    TooFewRuns(u64),
    #[error("all {0} runs diverged")]
    AllDiverged(u64),
    #[error("initial point has dimension {got}, objective expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("series value at n = {n} is not positive; its logarithm is undefined")]
    NonPositive { n: u64 },
    #[error("fit window has {0} points, at least 20 are required")]
    TooFewPoints(usize),
    #[error("series decreases at index {0}")]
    Decreasing(usize),
    #[error("series has {0} points, at least 100 are required")]
    SeriesTooShort(usize),
    #[error("check {check} needs the {series} series, which {algorithm} does not record")]
    MissingSeries {
        check: &'static str,
        series: &'static str,
        algorithm: &'static str,
    },
    #[error("the schedule has a divergent sum of squares")]
    DivergentSumOfSquares,
    #[error("invalid input: {0}")]
    Invalid(String),
}
