use serde::{Deserialize, Serialize};

use super::ensemble::summarize;
use super::rate::plateau_check;
use super::trajectory::TrajectoryRecord;
use super::DiagnosticsError;
use crate::optimizers::Algorithm;

/// Above this share of diverged runs, every check except L1 is inconclusive.
pub const INCONCLUSIVE_DIVERGED_FRACTION: f64 = 0.05;

const L9_EXPONENT: f64 = 0.1;
const L10_EXPONENT: f64 = 0.25;
const L10_EDGE_FRACTION: f64 = 0.1;

/// Named invariant checks on an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LemmaCheck {
    /// Ensemble-mean `g(θ_n)` stays bounded.
    L1,
    /// `Σ ‖v_t‖²` plateaus.
    L5,
    /// `Σ ε_t ‖∇g(θ_t)‖²` plateaus.
    L6,
    /// `Σ ‖∇g(θ_k)‖² / S_{k−1}^{0.6}` plateaus (AdaGrad).
    L8,
    /// `(g(θ_n) − g*) / S^{0.1}` is bounded and not rising late (AdaGrad).
    L9,
    /// `‖∇g(θ_n)‖² / S_{n−1}^{0.25}` shrinks from the first to the last tenth of the run (AdaGrad).
    L10,
}

impl LemmaCheck {
    pub fn name(self) -> &'static str {
        match self {
            LemmaCheck::L1 => "L1",
            LemmaCheck::L5 => "L5",
            LemmaCheck::L6 => "L6",
            LemmaCheck::L8 => "L8",
            LemmaCheck::L9 => "L9",
            LemmaCheck::L10 => "L10",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "L1" => LemmaCheck::L1,
            "L5" => LemmaCheck::L5,
            "L6" => LemmaCheck::L6,
            "L8" => LemmaCheck::L8,
            "L9" => LemmaCheck::L9,
            "L10" => LemmaCheck::L10,
            _ => return None,
        })
    }

    /// Whether `alg` records the series this check reads.
    pub fn applies_to(self, alg: &Algorithm) -> bool {
        match self {
            LemmaCheck::L1 | LemmaCheck::L6 => true,
            LemmaCheck::L5 => alg.is_momentum(),
            LemmaCheck::L8 | LemmaCheck::L9 | LemmaCheck::L10 => alg.is_adagrad(),
        }
    }

    /// Checks that apply to `alg` by default.
    pub fn defaults_for(alg: &Algorithm) -> Vec<LemmaCheck> {
        if alg.is_adagrad() {
            vec![LemmaCheck::L1, LemmaCheck::L8, LemmaCheck::L9, LemmaCheck::L10]
        } else {
            vec![LemmaCheck::L1, LemmaCheck::L5, LemmaCheck::L6]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaThresholds {
    pub bound_factor: f64,
    pub tail_fraction: f64,
    pub tau: f64,
}

impl Default for LemmaThresholds {
    fn default() -> Self {
        LemmaThresholds { bound_factor: 10.0, tail_fraction: 0.5, tau: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub check: LemmaCheck,
    pub verdict: Verdict,
    /// The measured statistic (bound ratio, tail increment ratio, ...).
    pub value: f64,
    /// What `value` was compared against.
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub algorithm: &'static str,
    pub runs: u64,
    pub diverged: u64,
    pub results: Vec<CheckResult>,
}

impl LemmaReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.verdict == Verdict::Pass)
    }

    pub fn failures(&self) -> Vec<&CheckResult> {
        self.results.iter().filter(|r| r.verdict != Verdict::Pass).collect()
    }

    pub fn get(&self, check: LemmaCheck) -> Option<&CheckResult> {
        self.results.iter().find(|r| r.check == check)
    }
}

/// The default checks for `alg` at default thresholds. `g_star` is the
/// objective's infimum.
pub fn lemma_suite(records: &[TrajectoryRecord], alg: &Algorithm, g_star: f64) -> Result<LemmaReport, DiagnosticsError> {
    run_lemma_checks(records, alg, &LemmaCheck::defaults_for(alg), &LemmaThresholds::default(), g_star)
}

pub fn run_lemma_checks(
    records: &[TrajectoryRecord],
    alg: &Algorithm,
    checks: &[LemmaCheck],
    thresholds: &LemmaThresholds,
    g_star: f64,
) -> Result<LemmaReport, DiagnosticsError> {
    if records.is_empty() {
        return Err(DiagnosticsError::TooFewRuns(0));
    }
    for &check in checks {
        if let (false, Some(series)) = (check.applies_to(alg), required_series(check)) {
            return Err(DiagnosticsError::MissingSeries { check: check.name(), series, algorithm: alg.name() });
        }
    }

    let runs = records.len() as u64;
    let kept: Vec<TrajectoryRecord> = records.iter().filter(|r| !r.status.is_diverged()).cloned().collect();
    let diverged = runs - kept.len() as u64;
    let fraction = diverged as f64 / runs as f64;
    let summary = if kept.is_empty() { None } else { Some(summarize(&kept)?) };

    let mut results = Vec::with_capacity(checks.len());
    for &check in checks {
        let result = match (&summary, check) {
            (_, LemmaCheck::L1) if diverged > 0 => CheckResult {
                check,
                verdict: Verdict::Fail,
                value: f64::INFINITY,
                threshold: thresholds.bound_factor,
                detail: format!("{diverged} of {runs} runs diverged"),
            },
            (Some(_), _) if fraction > INCONCLUSIVE_DIVERGED_FRACTION => inconclusive(check, diverged, runs),
            (None, _) => inconclusive(check, diverged, runs),
            (Some(s), LemmaCheck::L1) => {
                let initial = s.g.mean[0];
                let max = s.g.mean.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let bound = thresholds.bound_factor * (1.0 + initial);
                CheckResult {
                    check,
                    verdict: verdict(max <= bound),
                    value: max,
                    threshold: bound,
                    detail: format!("max mean g = {max:e}, initial mean g = {initial:e}"),
                }
            }
            (Some(s), LemmaCheck::L5) => plateau(check, &s.cum_v_sq.as_ref().expect("checked above").mean, thresholds)?,
            (Some(s), LemmaCheck::L6) => plateau(check, &s.cum_eps_grad_sq.mean, thresholds)?,
            (Some(s), LemmaCheck::L8) => plateau(check, &s.cum_adagrad_ratio.as_ref().expect("checked above").mean, thresholds)?,
            (Some(_), LemmaCheck::L9) => l9(&kept, g_star),
            (Some(_), LemmaCheck::L10) => l10(&kept),
        };
        results.push(result);
    }
    Ok(LemmaReport { algorithm: alg.name(), runs, diverged, results })
}

fn required_series(check: LemmaCheck) -> Option<&'static str> {
    match check {
        LemmaCheck::L1 | LemmaCheck::L6 => None,
        LemmaCheck::L5 => Some("cumulative momentum norm"),
        LemmaCheck::L8 => Some("cumulative accumulator-weighted gradient norm"),
        LemmaCheck::L9 | LemmaCheck::L10 => Some("accumulator"),
    }
}

fn verdict(pass: bool) -> Verdict {
    if pass {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn inconclusive(check: LemmaCheck, diverged: u64, runs: u64) -> CheckResult {
    CheckResult {
        check,
        verdict: Verdict::Inconclusive,
        value: f64::NAN,
        threshold: INCONCLUSIVE_DIVERGED_FRACTION,
        detail: format!("{diverged} of {runs} runs diverged"),
    }
}

fn plateau(check: LemmaCheck, series: &[f64], t: &LemmaThresholds) -> Result<CheckResult, DiagnosticsError> {
    let r = plateau_check(series, t.tail_fraction, t.tau)?;
    Ok(CheckResult {
        check,
        verdict: verdict(r.pass),
        value: r.tail_increment_ratio,
        threshold: t.tau,
        detail: format!("last {} of the run added {:.3e} of the total", t.tail_fraction, r.tail_increment_ratio),
    })
}

/// Per-row ensemble mean of `f(record, row)`, over rows where every run has
/// a positive accumulator. Returns the row positions and the means.
fn accumulator_ratio_means<F>(records: &[TrajectoryRecord], f: F) -> (Vec<usize>, Vec<f64>)
where
    F: Fn(&TrajectoryRecord, usize, f64) -> f64,
{
    let rows = records[0].len();
    let mut idx = Vec::new();
    let mut means = Vec::new();
    for k in 0..rows {
        let mut sum = 0.0;
        let mut ok = true;
        for r in records {
            let s = r.s.as_ref().expect("AdaGrad record")[k];
            if s <= 0.0 {
                ok = false;
                break;
            }
            sum += f(r, k, s);
        }
        if ok {
            idx.push(k);
            means.push(sum / records.len() as f64);
        }
    }
    (idx, means)
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn l9(records: &[TrajectoryRecord], g_star: f64) -> CheckResult {
    let (_, ratios) = accumulator_ratio_means(records, |r, k, s| (r.g[k] - g_star) / s.powf(L9_EXPONENT));
    let sup = ratios.iter().copied().fold(0.0, f64::max);
    let len = ratios.len();
    let third = mean(&ratios[len / 2..3 * len / 4]);
    let last = mean(&ratios[3 * len / 4..]);
    let pass = sup.is_finite() && last <= third;
    CheckResult {
        check: LemmaCheck::L9,
        verdict: verdict(pass),
        value: last,
        threshold: third,
        detail: format!("sup = {sup:e}; mean over the last quarter {last:e} vs third quarter {third:e}"),
    }
}

fn l10(records: &[TrajectoryRecord]) -> CheckResult {
    let (idx, ratios) = accumulator_ratio_means(records, |r, k, s| r.grad_sq[k] / s.powf(L10_EXPONENT));
    let rows = records[0].len();
    let edge = ((L10_EDGE_FRACTION * rows as f64).ceil() as usize).max(1);
    let mut first = 0.0f64;
    let mut last = 0.0f64;
    for (&k, &v) in idx.iter().zip(&ratios) {
        if k < edge {
            first = first.max(v);
        }
        if k >= rows.saturating_sub(edge) {
            last = last.max(v);
        }
    }
    let pass = last == 0.0 || last < first;
    CheckResult {
        check: LemmaCheck::L10,
        verdict: verdict(pass),
        value: last,
        threshold: first,
        detail: format!("max over the last tenth {last:e} vs first tenth {first:e}"),
    }
}
