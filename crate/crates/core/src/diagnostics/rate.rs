use serde::Serialize;

use super::ensemble::EnsembleSummary;
use super::DiagnosticsError;
use crate::schedule::StepSchedule;

/// Fraction of the horizon excluded from rate fits.
pub const DEFAULT_BURN_IN: f64 = 0.1;

const MIN_FIT_POINTS: usize = 20;
const MIN_PLATEAU_LEN: usize = 100;
const EM_START: u64 = 20;

/// `B_2, B_4, ..., B_12`.
const BERNOULLI: [f64; 6] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0];

/// `Σ_{k≥a} k^{-s}` for `s > 1`, `a ≥ 1`.
///
/// Terms below `max(a, 20)` are summed directly; the remaining tail uses
/// Euler-Maclaurin summation with corrections through `B_12`, whose
/// truncation error at `k = 20` is below `10⁻¹⁶` relative for `s ≤ 4`.
fn zeta_tail(s: f64, a: u64) -> f64 {
    let start = a.max(EM_START);
    let head: f64 = (a..start).map(|k| (k as f64).powf(-s)).sum();
    let n = start as f64;
    let mut tail = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // rising factorial s(s+1)...(s+2j-2), divided by (2j)!
    let mut coef = s / 2.0;
    let mut power = n.powf(-s - 1.0);
    for (j, b) in BERNOULLI.iter().enumerate() {
        let j = j as f64 + 1.0;
        tail += b * coef * power;
        coef *= (s + 2.0 * j - 1.0) * (s + 2.0 * j) / ((2.0 * j + 1.0) * (2.0 * j + 2.0));
        power /= n * n;
    }
    head + tail
}

/// Riemann zeta function for real `s > 1`; `+∞` for `s ≤ 1`.
pub fn riemann_zeta(s: f64) -> f64 {
    if s <= 1.0 {
        return f64::INFINITY;
    }
    zeta_tail(s, 1)
}

/// `p = exp(M Σ_{k≥1} ε_k²)`.
pub fn compute_p(m: f64, schedule: &StepSchedule) -> Result<f64, DiagnosticsError> {
    if !(m.is_finite() && m >= 0.0) {
        return Err(DiagnosticsError::Invalid(format!("noise constant M must be finite and nonnegative, got {m}")));
    }
    match *schedule {
        StepSchedule::Constant { .. } => Err(DiagnosticsError::DivergentSumOfSquares),
        _ if m == 0.0 => Ok(1.0),
        StepSchedule::Power { c0, gamma, n0 } => Ok((m * c0 * c0 * zeta_tail(2.0 * gamma, n0 + 1)).exp()),
    }
}

/// `exp(−s Σ_{i≤n} ε_i / (p (1−α)²))`.
pub fn predicted_rate_envelope(n: u64, s: f64, p: f64, alpha: f64, schedule: &StepSchedule) -> f64 {
    let one_minus = 1.0 - alpha;
    (-s * schedule.partial_sum(n) / (p * one_minus * one_minus)).exp()
}

/// Order of `(1/T) Σ_{n≤T} E‖∇g(θ_n)‖²` as `T → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "order", rename_all = "snake_case")]
pub enum TimeAverageOrder {
    /// `O(T^{−q})`
    Power { q: f64 },
    /// `O(ln T / T)`
    LogOverT,
    /// `O(1/T)`
    OneOverT,
}

/// `q` within this distance of 1 counts as the boundary case.
const ORDER_BOUNDARY_TOL: f64 = 1e-12;

pub fn classify_time_average_order(q: f64) -> TimeAverageOrder {
    if (q - 1.0).abs() <= ORDER_BOUNDARY_TOL {
        TimeAverageOrder::LogOverT
    } else if q < 1.0 {
        TimeAverageOrder::Power { q }
    } else {
        TimeAverageOrder::OneOverT
    }
}

/// Log-log slope the order predicts when measured on the points `ts`.
///
/// Pure powers have constant slope; `ln T / T` has slope `1/ln T − 1`, so it
/// is fitted on the same points for a like-for-like comparison.
pub fn predicted_time_average_slope(order: TimeAverageOrder, ts: &[f64]) -> Result<f64, DiagnosticsError> {
    match order {
        TimeAverageOrder::Power { q } => Ok(-q),
        TimeAverageOrder::OneOverT => Ok(-1.0),
        TimeAverageOrder::LogOverT => {
            let ys: Vec<f64> = ts.iter().map(|t| t.ln() / t).collect();
            loglog_slope(ts, &ys)
        }
    }
}

/// OLS slope of `ln y` against `ln t`.
pub fn loglog_slope(ts: &[f64], ys: &[f64]) -> Result<f64, DiagnosticsError> {
    if ts.len() != ys.len() {
        return Err(DiagnosticsError::Invalid(format!("{} abscissae but {} ordinates", ts.len(), ys.len())));
    }
    if ts.len() < 2 {
        return Err(DiagnosticsError::TooFewPoints(ts.len()));
    }
    let mut lx = Vec::with_capacity(ts.len());
    let mut ly = Vec::with_capacity(ts.len());
    for (&t, &y) in ts.iter().zip(ys) {
        if !(t > 0.0 && y > 0.0) {
            return Err(DiagnosticsError::Invalid(format!("log-log points must be positive, got ({t}, {y})")));
        }
        lx.push(t.ln());
        ly.push(y.ln());
    }
    Ok(ols(&lx, &ly)?.0)
}

/// Running mean `(1/T) Σ_{n≤T} a_n` of an unthinned series.
pub fn time_average(series: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    series
        .iter()
        .enumerate()
        .map(|(i, a)| {
            sum += a;
            sum / (i + 1) as f64
        })
        .collect()
}

/// `(1/T) Σ_{n≤T} Ê‖∇g(θ_n)‖²` at each recorded `T`.
///
/// Exact even for thinned summaries, since trajectories accumulate the
/// gradient norm at every step.
pub fn time_average_curve(summary: &EnsembleSummary) -> Vec<f64> {
    summary
        .n
        .iter()
        .zip(&summary.cum_grad_sq.mean)
        .map(|(&n, c)| c / n as f64)
        .collect()
}

/// Least-squares fit of `ln Ê‖∇g(θ_n)‖²` against `x_n = Σ_{i≤n} ε_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    /// Fitted exponent; negative when the series decays.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// First and last `n` inside the fit window.
    pub window_start: u64,
    pub window_end: u64,
    pub points: usize,
}

pub fn fit_decay_exponent(summary: &EnsembleSummary, schedule: &StepSchedule, burn_in: f64) -> Result<RateFit, DiagnosticsError> {
    fit_decay_exponent_with(&summary.n, &summary.grad_sq.mean, |i| schedule.value(i), burn_in)
}

/// [`fit_decay_exponent`] on raw rows with an arbitrary step sequence.
///
/// Rows with `n < burn_in · n_last` are dropped. `x_n` is accumulated in
/// index order over every step, not only recorded rows.
pub fn fit_decay_exponent_with<F>(n: &[u64], series: &[f64], step: F, burn_in: f64) -> Result<RateFit, DiagnosticsError>
where
    F: Fn(u64) -> f64,
{
    if n.len() != series.len() {
        return Err(DiagnosticsError::Invalid(format!("{} row indices but {} values", n.len(), series.len())));
    }
    if !(0.0..1.0).contains(&burn_in) {
        return Err(DiagnosticsError::Invalid(format!("burn-in fraction must lie in [0,1), got {burn_in}")));
    }
    let Some(&last) = n.last() else {
        return Err(DiagnosticsError::TooFewPoints(0));
    };
    let cutoff = (burn_in * last as f64).ceil() as u64;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut window = Vec::new();
    let mut x = 0.0;
    let mut next = 1;
    for (&ni, &yi) in n.iter().zip(series) {
        while next <= ni {
            x += step(next);
            next += 1;
        }
        if ni < cutoff {
            continue;
        }
        if yi.is_nan() || yi <= 0.0 {
            return Err(DiagnosticsError::NonPositive { n: ni });
        }
        xs.push(x);
        ys.push(yi.ln());
        window.push(ni);
    }
    if xs.len() < MIN_FIT_POINTS {
        return Err(DiagnosticsError::TooFewPoints(xs.len()));
    }
    let (slope, intercept, r_squared) = ols(&xs, &ys)?;
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        window_start: window[0],
        window_end: window[window.len() - 1],
        points: xs.len(),
    })
}

/// Returns `(slope, intercept, R²)`. A response with no spread is fitted
/// exactly and reports `R² = 1`.
fn ols(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64), DiagnosticsError> {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= 0.0 {
        return Err(DiagnosticsError::Invalid("regressor has no spread".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    // Spread at the level of summation round-off means a constant response.
    let noise_floor = 64.0 * k * f64::EPSILON * (1.0 + my.abs());
    let r_squared = if syy <= k * noise_floor * noise_floor {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok((slope, intercept, r_squared))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlateauResult {
    pub pass: bool,
    pub tail_increment_ratio: f64,
}

/// Share of a nondecreasing cumulative series gained over its final
/// `tail_fraction`; a summable series plateaus and gains almost nothing.
pub fn plateau_check(series: &[f64], tail_fraction: f64, tau: f64) -> Result<PlateauResult, DiagnosticsError> {
    if series.len() < MIN_PLATEAU_LEN {
        return Err(DiagnosticsError::SeriesTooShort(series.len()));
    }
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(DiagnosticsError::Invalid(format!("tail fraction must lie in (0,1), got {tail_fraction}")));
    }
    if let Some(i) = series.windows(2).position(|w| w[1] < w[0]) {
        return Err(DiagnosticsError::Decreasing(i + 1));
    }
    let len = series.len();
    let idx = (((1.0 - tail_fraction) * len as f64).floor() as usize).min(len - 1);
    let last = series[len - 1];
    let ratio = (last - series[idx]) / last.max(1e-12);
    Ok(PlateauResult { pass: ratio < tau, tail_increment_ratio: ratio })
}
