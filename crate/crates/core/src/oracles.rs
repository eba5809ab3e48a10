//! Stochastic gradient oracles `∇g(θ, ξ_n)`.
//!
//! Each call consumes fresh draws from the run's [`RngStream`] and nothing
//! else, so samples at step `n` are independent of every other step.
//! "Uniform sampling" noise is read as a uniform choice among the summands of
//! a finite-sum objective.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objectives::Objective;
use crate::param::ParamVector;
use crate::rng::{rng_substream, RngStream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("noise scale sigma must be positive and finite, got {0}")]
    Sigma(f64),
    #[error("finite_sum_uniform needs a finite-sum objective, `{0}` is not one")]
    NotFiniteSum(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleKind {
    Exact,
    AdditiveGaussian { sigma: f64 },
    FiniteSumUniform,
}

impl OracleKind {
    pub fn name(&self) -> &'static str {
        match self {
            OracleKind::Exact => "exact",
            OracleKind::AdditiveGaussian { .. } => "additive_gaussian",
            OracleKind::FiniteSumUniform => "finite_sum_uniform",
        }
    }
}

/// A gradient sampler bound to one objective.
#[derive(Debug, Clone)]
pub struct GradientOracle<'a> {
    kind: OracleKind,
    objective: &'a Objective,
}

impl<'a> GradientOracle<'a> {
    pub fn new(kind: OracleKind, objective: &'a Objective) -> Result<Self, OracleError> {
        match kind {
            OracleKind::AdditiveGaussian { sigma } if !(sigma.is_finite() && sigma > 0.0) => {
                return Err(OracleError::Sigma(sigma))
            }
            OracleKind::FiniteSumUniform if objective.finite_sum_len().is_none() => {
                return Err(OracleError::NotFiniteSum(objective.id().to_string()))
            }
            _ => {}
        }
        Ok(GradientOracle { kind, objective })
    }

    pub fn kind(&self) -> OracleKind {
        self.kind
    }

    pub fn objective(&self) -> &'a Objective {
        self.objective
    }

    pub fn sample_into(&self, theta: &ParamVector, rng: &mut RngStream, out: &mut ParamVector) {
        match self.kind {
            OracleKind::Exact => self.objective.grad_into(theta, out),
            OracleKind::AdditiveGaussian { sigma } => {
                self.objective.grad_into(theta, out);
                for x in out.as_mut_slice() {
                    *x += sigma * rng.standard_normal();
                }
            }
            OracleKind::FiniteSumUniform => {
                let m = self.objective.finite_sum_len().expect("checked at construction");
                let i = rng.index(m);
                self.objective.component_grad_into(i, theta, out);
            }
        }
    }

    /// [`Self::sample_into`] reusing an already computed `∇g(θ)`.
    pub fn sample_given_grad_into(&self, theta: &ParamVector, true_grad: &ParamVector, rng: &mut RngStream, out: &mut ParamVector) {
        match self.kind {
            OracleKind::Exact => out.copy_from(true_grad),
            OracleKind::AdditiveGaussian { sigma } => {
                for (o, g) in out.as_mut_slice().iter_mut().zip(true_grad.iter()) {
                    *o = g + sigma * rng.standard_normal();
                }
            }
            OracleKind::FiniteSumUniform => self.sample_into(theta, rng, out),
        }
    }

    pub fn sample(&self, theta: &ParamVector, rng: &mut RngStream) -> ParamVector {
        let mut out = ParamVector::zeros(theta.dim());
        self.sample_into(theta, rng, &mut out);
        out
    }

    /// Every possible sample with its probability, when the noise is enumerable.
    pub fn enumerate(&self, theta: &ParamVector) -> Option<Vec<(f64, ParamVector)>> {
        match self.kind {
            OracleKind::Exact => Some(vec![(1.0, self.objective.grad(theta))]),
            OracleKind::AdditiveGaussian { .. } => None,
            OracleKind::FiniteSumUniform => {
                let m = self.objective.finite_sum_len()?;
                Some(
                    (0..m)
                        .map(|i| {
                            let mut g = ParamVector::zeros(theta.dim());
                            self.objective.component_grad_into(i, theta, &mut g);
                            (1.0 / m as f64, g)
                        })
                        .collect(),
                )
            }
        }
    }
}

/// Free-function form of [`GradientOracle::sample`].
pub fn sample_gradient(oracle: &GradientOracle<'_>, theta: &ParamVector, rng: &mut RngStream) -> ParamVector {
    oracle.sample(theta, rng)
}

/// Closed-form (or window-computed) constants of the noise conditions
/// `E‖∇g(θ,ξ) − ∇g(θ)‖² ≤ M(1 + g(θ))` and `E‖∇g(θ,ξ)‖² ≤ M′‖∇g(θ)‖² + a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseConstants {
    pub m: f64,
    pub m_prime: f64,
    pub a: f64,
    /// `M = 0` only holds vacuously: any positive `M` satisfies the bound.
    pub m_vacuous: bool,
    /// Computed by enumeration over a point set rather than in closed form.
    pub empirical: bool,
}

/// Number of window points used for finite-sum constants.
const FINITE_SUM_POINTS: usize = 1000;

pub fn theoretical_noise_constants(oracle: &GradientOracle<'_>) -> NoiseConstants {
    let dim = oracle.objective().dim() as f64;
    match oracle.kind() {
        OracleKind::Exact => NoiseConstants {
            m: 0.0,
            m_prime: 1.0,
            a: 0.0,
            m_vacuous: true,
            empirical: false,
        },
        // E‖∇g + ξ‖² = ‖∇g‖² + Nσ², and g ≥ 0 gives Nσ² ≤ Nσ²(1 + g).
        OracleKind::AdditiveGaussian { sigma } => NoiseConstants {
            m: dim * sigma * sigma,
            m_prime: 1.0,
            a: dim * sigma * sigma,
            m_vacuous: false,
            empirical: false,
        },
        OracleKind::FiniteSumUniform => finite_sum_constants(oracle),
    }
}

/// Exact expectations at deterministic window points; `M′` is fixed at 1
/// and `a` is the largest excess over `‖∇g‖²`.
fn finite_sum_constants(oracle: &GradientOracle<'_>) -> NoiseConstants {
    let obj = oracle.objective();
    let w = obj.window();
    let mut rng = rng_substream(0, u64::MAX);
    let mut m: f64 = 0.0;
    let mut a: f64 = 0.0;
    for _ in 0..FINITE_SUM_POINTS {
        let theta = ParamVector::new((0..obj.dim()).map(|j| rng.uniform_in(w.lower[j], w.upper[j])).collect());
        let g = obj.grad(&theta);
        let samples = oracle.enumerate(&theta).expect("finite sums enumerate");
        let var: f64 = samples.iter().map(|(p, s)| p * s.distance(&g).powi(2)).sum();
        let second: f64 = samples.iter().map(|(p, s)| p * s.norm_sq()).sum();
        m = m.max(var / (1.0 + obj.eval(&theta)));
        a = a.max(second - g.norm_sq());
    }
    NoiseConstants {
        m,
        m_prime: 1.0,
        a,
        m_vacuous: m == 0.0,
        empirical: true,
    }
}
