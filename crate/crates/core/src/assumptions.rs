//! Empirical estimates of the constants in the standing assumptions
//! (gradient Lipschitz `c`, noise bounds `M`, `M′`, `a`, local P-L `s`) and
//! the resulting applicability of the convergence theorems.
//!
//! Max-type estimators are one-sided: sampling can expose a violation of a
//! claimed bound but never certify one.

use serde::Serialize;
use thiserror::Error;

use crate::objectives::{Objective, ObjectiveError};
use crate::optimizers::Algorithm;
use crate::oracles::{GradientOracle, OracleError, OracleKind};
use crate::param::{ParamVector, Region};
use crate::rng::{rng_substream, RngStream};
use crate::schedule::ScheduleReport;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssumptionError {
    #[error("need at least {min} {what}, got {got}")]
    TooFew { what: &'static str, min: usize, got: usize },
    #[error("sampling region is degenerate")]
    DegenerateRegion,
    #[error("region has dimension {got}, objective expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("radius must lie in (1e-4, 0.5], got {0}")]
    Radius(f64),
    #[error("design is rank deficient: every sampled point has the same gradient norm")]
    RankDeficient,
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

const MIN_PAIRS: usize = 1000;
const MIN_SAMPLES: usize = 1000;
const MIN_FIT_POINTS: usize = 20;
const MIN_SEPARATION: f64 = 1e-6;
/// Pair separations are drawn log-uniformly in `[10⁻⁴, 1] × diameter`.
const SEPARATION_DECADES: f64 = 4.0;
const PL_MIN_DISTANCE: f64 = 1e-4;
const VIOLATION_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzEstimate {
    pub value: f64,
    pub region: Region,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseEstimate {
    /// `M̂`
    pub value: f64,
    /// Standard error at the maximizing point (0 when computed exactly).
    pub std_error: f64,
    pub region: Region,
    pub points: usize,
    pub samples_per_point: usize,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondMomentFit {
    /// `M̂′`
    pub m_prime: f64,
    pub m_prime_std_error: f64,
    /// `â`
    pub a: f64,
    pub a_std_error: f64,
    pub r_squared: f64,
    /// Points whose second moment lies above the fitted line by more than
    /// three of their own standard errors.
    pub violations: usize,
    pub region: Region,
    pub points: usize,
    pub samples_per_point: usize,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalPlEstimate {
    pub component: usize,
    /// `ŝ_i`
    pub value: f64,
    pub radius: f64,
    pub samples: usize,
}

fn check_region(obj: &Objective, region: &Region) -> Result<(), AssumptionError> {
    if region.dim() != obj.dim() {
        return Err(AssumptionError::Dimension { expected: obj.dim(), got: region.dim() });
    }
    if region.is_degenerate() {
        return Err(AssumptionError::DegenerateRegion);
    }
    Ok(())
}

fn at_least(what: &'static str, min: usize, got: usize) -> Result<(), AssumptionError> {
    if got < min {
        return Err(AssumptionError::TooFew { what, min, got });
    }
    Ok(())
}

/// A point drawn uniformly from `region`.
pub fn uniform_point(region: &Region, rng: &mut RngStream) -> ParamVector {
    ParamVector::new((0..region.dim()).map(|j| rng.uniform_in(region.lower[j], region.upper[j])).collect())
}

/// `max ‖∇g(x) − ∇g(y)‖ / ‖x − y‖` over `pairs` random pairs in `region`.
///
/// `x` is uniform in the region and `y` is `x` moved in a random direction
/// by a log-uniform distance, then clamped back into the region; pairs
/// closer than `10⁻⁶` are redrawn. Pair `k` depends only on the first `k`
/// draws, so growing `pairs` never lowers the estimate.
pub fn estimate_lipschitz(obj: &Objective, region: &Region, pairs: usize, rng: &mut RngStream) -> Result<LipschitzEstimate, AssumptionError> {
    check_region(obj, region)?;
    at_least("pairs", MIN_PAIRS, pairs)?;
    let diameter = region.diameter();
    let mut sampled = Vec::with_capacity(pairs);
    while sampled.len() < pairs {
        let x = uniform_point(region, rng);
        let scale = diameter * 10f64.powf(-SEPARATION_DECADES * rng.uniform());
        let mut dir = ParamVector::new((0..obj.dim()).map(|_| rng.standard_normal()).collect());
        let norm = dir.norm();
        if norm == 0.0 {
            continue;
        }
        let mut y = x.clone();
        dir.as_mut_slice().iter_mut().for_each(|d| *d /= norm);
        y.axpy(scale, &dir);
        region.clamp(&mut y);
        if x.distance(&y) >= MIN_SEPARATION {
            sampled.push((x, y));
        }
    }
    Ok(LipschitzEstimate { value: estimate_lipschitz_at(obj, &sampled), region: region.clone(), pairs })
}

/// Secant maximum over given pairs; pairs closer than `10⁻⁶` are ignored.
pub fn estimate_lipschitz_at(obj: &Objective, pairs: &[(ParamVector, ParamVector)]) -> f64 {
    let mut gx = ParamVector::zeros(obj.dim());
    let mut gy = ParamVector::zeros(obj.dim());
    let mut best: f64 = 0.0;
    for (x, y) in pairs {
        let sep = x.distance(y);
        if sep < MIN_SEPARATION {
            continue;
        }
        obj.grad_into(x, &mut gx);
        obj.grad_into(y, &mut gy);
        best = best.max(gx.distance(&gy) / sep);
    }
    best
}

/// Mean and standard error of `f` over `samples` oracle draws at `theta`,
/// or the exact expectation when the oracle is enumerable.
fn oracle_moment<F>(oracle: &GradientOracle<'_>, theta: &ParamVector, samples: usize, rng: &mut RngStream, f: F) -> (f64, f64)
where
    F: Fn(&ParamVector) -> f64,
{
    if let Some(support) = oracle.enumerate(theta) {
        return (support.iter().map(|(p, s)| p * f(s)).sum(), 0.0);
    }
    let mut buf = ParamVector::zeros(theta.dim());
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        oracle.sample_into(theta, rng, &mut buf);
        let v = f(&buf);
        sum += v;
        sum_sq += v * v;
    }
    let k = samples as f64;
    let mean = sum / k;
    let var = ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0);
    (mean, (var / k).sqrt())
}

/// `M̂ = max_θ Ê‖∇g(θ,ξ) − ∇g(θ)‖² / (1 + g(θ))` over `points` uniform points
/// of the objective window.
pub fn estimate_noise_m(oracle: &GradientOracle<'_>, points: usize, samples_per_point: usize, rng: &mut RngStream) -> Result<NoiseEstimate, AssumptionError> {
    let region = oracle.objective().window().clone();
    at_least("points", 1, points)?;
    let thetas: Vec<ParamVector> = (0..points).map(|_| uniform_point(&region, rng)).collect();
    let mut est = estimate_noise_m_at(oracle, &thetas, samples_per_point, rng)?;
    est.region = region;
    Ok(est)
}

pub fn estimate_noise_m_at(oracle: &GradientOracle<'_>, points: &[ParamVector], samples_per_point: usize, rng: &mut RngStream) -> Result<NoiseEstimate, AssumptionError> {
    at_least("samples per point", MIN_SAMPLES, samples_per_point)?;
    at_least("points", 1, points.len())?;
    let obj = oracle.objective();
    let (mut value, mut std_error) = (0.0, 0.0);
    let mut exact = true;
    for theta in points {
        let g = obj.grad(theta);
        let scale = 1.0 + obj.eval(theta);
        exact &= oracle.enumerate(theta).is_some();
        let (mean, se) = oracle_moment(oracle, theta, samples_per_point, rng, |s| s.distance(&g).powi(2));
        if mean / scale > value {
            value = mean / scale;
            std_error = se / scale;
        }
    }
    Ok(NoiseEstimate {
        value,
        std_error,
        region: bounding_box(points),
        points: points.len(),
        samples_per_point,
        exact,
    })
}

/// Least-squares fit `Ê‖∇g(θ,ξ)‖² ≈ M̂′ ‖∇g(θ)‖² + â` over `points` uniform
/// points of `region`.
pub fn estimate_mprime_a(
    oracle: &GradientOracle<'_>,
    region: &Region,
    points: usize,
    samples_per_point: usize,
    rng: &mut RngStream,
) -> Result<SecondMomentFit, AssumptionError> {
    check_region(oracle.objective(), region)?;
    at_least("points", MIN_FIT_POINTS, points)?;
    let thetas: Vec<ParamVector> = (0..points).map(|_| uniform_point(region, rng)).collect();
    let mut fit = estimate_mprime_a_at(oracle, &thetas, samples_per_point, rng)?;
    fit.region = region.clone();
    Ok(fit)
}

pub fn estimate_mprime_a_at(
    oracle: &GradientOracle<'_>,
    points: &[ParamVector],
    samples_per_point: usize,
    rng: &mut RngStream,
) -> Result<SecondMomentFit, AssumptionError> {
    at_least("points", MIN_FIT_POINTS, points.len())?;
    at_least("samples per point", MIN_SAMPLES, samples_per_point)?;
    let obj = oracle.objective();
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    let mut ses = Vec::with_capacity(points.len());
    let mut exact = true;
    for theta in points {
        xs.push(obj.grad(theta).norm_sq());
        exact &= oracle.enumerate(theta).is_some();
        let (mean, se) = oracle_moment(oracle, theta, samples_per_point, rng, ParamVector::norm_sq);
        ys.push(mean);
        ses.push(se);
    }

    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-24 * (1.0 + mx * mx) * k {
        return Err(AssumptionError::RankDeficient);
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let m_prime = sxy / sxx;
    let a = my - m_prime * mx;
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - (m_prime * x + a)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let sigma2 = ss_res / (k - 2.0);
    // Exact moments carry only round-off in their residuals.
    let tolerance = 1e-9 * (1.0 + my.abs());
    let violations = residuals
        .iter()
        .zip(&ses)
        .filter(|(r, se)| **r > VIOLATION_SIGMAS * **se + tolerance)
        .count();
    Ok(SecondMomentFit {
        m_prime,
        m_prime_std_error: (sigma2 / sxx).sqrt(),
        a,
        a_std_error: (sigma2 * (1.0 / k + mx * mx / sxx)).sqrt(),
        r_squared: if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 },
        violations,
        region: bounding_box(points),
        points: points.len(),
        samples_per_point,
        exact,
    })
}

/// `ŝ_i = min ‖∇g(θ)‖² / |g(θ) − g_i|` over `samples` points at a uniform
/// distance in `(10⁻⁴, radius)` from component `i`.
pub fn estimate_local_pl_s(obj: &Objective, component: usize, radius: f64, samples: usize, rng: &mut RngStream) -> Result<LocalPlEstimate, AssumptionError> {
    if !(radius > PL_MIN_DISTANCE && radius <= 0.5) {
        return Err(AssumptionError::Radius(radius));
    }
    at_least("samples", MIN_SAMPLES, samples)?;
    let comp = obj.component(component)?;
    let thetas: Vec<ParamVector> = (0..samples)
        .map(|_| {
            let d = rng.uniform_in(PL_MIN_DISTANCE, radius);
            comp.point_at_distance(d, rng)
        })
        .collect();
    Ok(LocalPlEstimate {
        component,
        value: estimate_local_pl_s_at(obj, component, &thetas)?,
        radius,
        samples,
    })
}

/// Minimum P-L ratio relative to component `i` over the given points;
/// points on the component's level set are skipped.
pub fn estimate_local_pl_s_at(obj: &Objective, component: usize, points: &[ParamVector]) -> Result<f64, AssumptionError> {
    let g_i = obj.component(component)?.value;
    let mut grad = ParamVector::zeros(obj.dim());
    let mut best = f64::INFINITY;
    for theta in points {
        let gap = (obj.eval(theta) - g_i).abs();
        if gap == 0.0 {
            continue;
        }
        obj.grad_into(theta, &mut grad);
        best = best.min(grad.norm_sq() / gap);
    }
    Ok(best)
}

fn bounding_box(points: &[ParamVector]) -> Region {
    let dim = points[0].dim();
    let mut lower = vec![f64::INFINITY; dim];
    let mut upper = vec![f64::NEG_INFINITY; dim];
    for p in points {
        for (j, &x) in p.iter().enumerate() {
            lower[j] = lower[j].min(x);
            upper[j] = upper[j].max(x);
        }
    }
    Region { lower, upper }
}

/// Sample sizes and seed for [`build_assumption_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssumptionSettings {
    pub lipschitz_pairs: usize,
    pub noise_points: usize,
    pub samples_per_point: usize,
    pub fit_points: usize,
    pub pl_radius: f64,
    pub pl_samples: usize,
    pub seed: u64,
}

impl Default for AssumptionSettings {
    fn default() -> Self {
        AssumptionSettings {
            lipschitz_pairs: 10_000,
            noise_points: 200,
            samples_per_point: 20_000,
            fit_points: 40,
            pl_radius: 0.1,
            pl_samples: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Applicability {
    pub holds: bool,
    /// Why it does not hold; empty when it does.
    pub reasons: Vec<String>,
}

impl Applicability {
    fn from_reasons(reasons: Vec<String>) -> Self {
        Applicability { holds: reasons.is_empty(), reasons }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremApplicability {
    pub thm1: Applicability,
    pub thm2: Applicability,
    pub thm3: Applicability,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub lipschitz: LipschitzEstimate,
    pub noise_m: NoiseEstimate,
    pub second_moment: SecondMomentFit,
    pub local_pl: Vec<LocalPlEstimate>,
    pub s_hat_min: f64,
    /// Robbins-Monro classification of the step sizes (absent for AdaGrad).
    pub schedule: Option<ScheduleReport>,
    pub applicability: TheoremApplicability,
}

/// Runs every estimator on the objective window and evaluates which
/// theorems' hypotheses the experiment meets. Each estimator draws from its
/// own substream of `settings.seed`.
pub fn build_assumption_report(
    obj: &Objective,
    oracle_kind: OracleKind,
    alg: &Algorithm,
    settings: &AssumptionSettings,
) -> Result<AssumptionReport, AssumptionError> {
    let oracle = GradientOracle::new(oracle_kind, obj)?;
    let window = obj.window().clone();
    let seed = settings.seed;
    let lipschitz = estimate_lipschitz(obj, &window, settings.lipschitz_pairs, &mut rng_substream(seed, 0))?;
    let noise_m = estimate_noise_m(&oracle, settings.noise_points, settings.samples_per_point, &mut rng_substream(seed, 1))?;
    let second_moment = estimate_mprime_a(&oracle, &window, settings.fit_points, settings.samples_per_point, &mut rng_substream(seed, 2))?;
    let local_pl = (0..obj.metadata().components.len())
        .map(|i| estimate_local_pl_s(obj, i, settings.pl_radius, settings.pl_samples, &mut rng_substream(seed, 3 + i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let s_hat_min = local_pl.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);

    let schedule = match *alg {
        Algorithm::Sgd { epsilon } | Algorithm::Msgd { epsilon, .. } => Some(epsilon.validate()),
        // ε_n = γ_n (1 − β_n) with β_n < 1 bounded away from 1 inherits γ's classification.
        Algorithm::Shb { gamma, .. } => Some(gamma.validate()),
        _ => None,
    };

    let mut thm1 = Vec::new();
    if !alg.is_momentum() {
        thm1.push(format!("{} is not a momentum-type method", alg.name()));
    }
    if let Some(rep) = schedule {
        if !rep.sum_diverges {
            thm1.push("Σε convergent".to_string());
        }
        if !rep.sum_sq_converges {
            thm1.push("Σε² divergent".to_string());
        }
        if !rep.monotone {
            thm1.push("ε not nonincreasing".to_string());
        }
    }
    if let Algorithm::Msgd { alpha, .. } = *alg {
        if !(0.0..1.0).contains(&alpha) {
            thm1.push(format!("alpha = {alpha} outside [0,1)"));
        }
    }
    if !noise_m.value.is_finite() {
        thm1.push("noise constant M is not finite".to_string());
    }

    let mut thm2 = thm1.clone();
    if oracle_kind != OracleKind::FiniteSumUniform {
        thm2.push(format!("oracle {} is not uniform sampling over a finite sum", oracle_kind.name()));
    }
    if s_hat_min.is_nan() || s_hat_min <= 0.0 {
        thm2.push("local P-L constant is not positive".to_string());
    }

    let mut thm3 = Vec::new();
    if !alg.is_adagrad() {
        thm3.push(format!("{} is not AdaGrad", alg.name()));
    }
    if !(second_moment.m_prime.is_finite() && second_moment.a.is_finite()) {
        thm3.push("second-moment constants are not finite".to_string());
    }

    Ok(AssumptionReport {
        lipschitz,
        noise_m,
        second_moment,
        local_pl,
        s_hat_min,
        schedule,
        applicability: TheoremApplicability {
            thm1: Applicability::from_reasons(thm1),
            thm2: Applicability::from_reasons(thm2),
            thm3: Applicability::from_reasons(thm3),
        },
    })
}
