//! Update rules for SGD, momentum SGD, stochastic heavy ball and AdaGrad.
//!
//! Each state type owns its iterate and advances in place through `step`.
//! The free functions (`sgd_step`, `msgd_step`, ...) are pure wrappers that
//! return the successor state. A step fails with [`Divergence`] when the new
//! iterate or buffer is non-finite or leaves the divergence guard.
//!
//! Coordinate AdaGrad uses the diagonal reading: one accumulator per
//! coordinate, `Q_j += grad_j²`, `θ_j -= ᾱ0 grad_j / √Q_j`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::param::ParamVector;
use crate::schedule::StepSchedule;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("iterate diverged at step {step}")]
pub struct Divergence {
    pub step: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HyperParamError {
    #[error("alpha must lie in [0,1), got {0}")]
    Alpha(f64),
    #[error("alpha0 must be positive and finite, got {0}")]
    Alpha0(f64),
    #[error("beta must lie in (0,1) at every step, got {0} at n = 1")]
    Beta(f64),
}

fn guard(theta: &ParamVector, buffer: Option<&ParamVector>, step: u64) -> Result<(), Divergence> {
    if theta.exceeds_guard() || buffer.is_some_and(|v| !v.is_finite()) {
        return Err(Divergence { step });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdState {
    pub theta: ParamVector,
    pub n: u64,
}

impl SgdState {
    pub fn new(theta: ParamVector) -> Self {
        SgdState { theta, n: 1 }
    }

    /// `θ ← θ − ε_n grad`
    pub fn step(&mut self, grad: &ParamVector, eps: f64) -> Result<(), Divergence> {
        self.theta.axpy(-eps, grad);
        let step = self.n;
        self.n += 1;
        guard(&self.theta, None, step)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsgdState {
    pub theta: ParamVector,
    pub v: ParamVector,
    pub n: u64,
}

impl MsgdState {
    pub fn new(theta: ParamVector, v0: ParamVector) -> Self {
        assert_eq!(theta.dim(), v0.dim(), "momentum buffer must match the iterate");
        MsgdState { theta, v: v0, n: 1 }
    }

    /// `v ← α v + ε_n grad; θ ← θ − v`
    pub fn step(&mut self, grad: &ParamVector, alpha: f64, eps: f64) -> Result<(), Divergence> {
        for ((v, t), g) in self
            .v
            .as_mut_slice()
            .iter_mut()
            .zip(self.theta.as_mut_slice())
            .zip(grad.iter())
        {
            *v = alpha * *v + eps * g;
            *t -= *v;
        }
        let step = self.n;
        self.n += 1;
        guard(&self.theta, Some(&self.v), step)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShbState {
    pub theta: ParamVector,
    pub v: ParamVector,
    pub n: u64,
}

impl ShbState {
    pub fn new(theta: ParamVector, v0: ParamVector) -> Self {
        assert_eq!(theta.dim(), v0.dim(), "momentum buffer must match the iterate");
        ShbState { theta, v: v0, n: 1 }
    }

    /// `v ← β_n v + (1 − β_n) grad; θ ← θ − γ_n v`
    pub fn step(&mut self, grad: &ParamVector, beta: f64, gamma: f64) -> Result<(), Divergence> {
        for ((v, t), g) in self
            .v
            .as_mut_slice()
            .iter_mut()
            .zip(self.theta.as_mut_slice())
            .zip(grad.iter())
        {
            *v = beta * *v + (1.0 - beta) * g;
            *t -= gamma * *v;
        }
        let step = self.n;
        self.n += 1;
        guard(&self.theta, Some(&self.v), step)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdagradNormState {
    pub theta: ParamVector,
    /// `S_n`, starting from `S_0 = 0`.
    pub s: f64,
    pub n: u64,
}

impl AdagradNormState {
    pub fn new(theta: ParamVector) -> Self {
        AdagradNormState { theta, s: 0.0, n: 1 }
    }

    /// `S ← S + ‖grad‖²; θ ← θ − α0 grad / √S`. The update is skipped while `S = 0`.
    pub fn step(&mut self, grad: &ParamVector, alpha0: f64) -> Result<(), Divergence> {
        self.s += grad.norm_sq();
        if self.s > 0.0 {
            self.theta.axpy(-alpha0 / self.s.sqrt(), grad);
        }
        let step = self.n;
        self.n += 1;
        if !self.s.is_finite() {
            return Err(Divergence { step });
        }
        guard(&self.theta, None, step)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdagradCoordState {
    pub theta: ParamVector,
    /// Per-coordinate accumulators `Q_n`, starting from zero.
    pub q: ParamVector,
    pub n: u64,
}

impl AdagradCoordState {
    pub fn new(theta: ParamVector) -> Self {
        let dim = theta.dim();
        AdagradCoordState {
            theta,
            q: ParamVector::zeros(dim),
            n: 1,
        }
    }

    pub fn step(&mut self, grad: &ParamVector, alpha0: f64) -> Result<(), Divergence> {
        for ((q, t), g) in self
            .q
            .as_mut_slice()
            .iter_mut()
            .zip(self.theta.as_mut_slice())
            .zip(grad.iter())
        {
            *q += g * g;
            if *q > 0.0 {
                *t += (-alpha0 / q.sqrt()) * g;
            }
        }
        let step = self.n;
        self.n += 1;
        guard(&self.theta, Some(&self.q), step)
    }

    /// Sum of the coordinate accumulators, which equals the norm-form `S_n`.
    pub fn total(&self) -> f64 {
        self.q.iter().sum()
    }
}

pub fn sgd_step(state: &SgdState, grad: &ParamVector, eps: f64) -> Result<SgdState, Divergence> {
    let mut next = state.clone();
    next.step(grad, eps)?;
    Ok(next)
}

pub fn msgd_step(state: &MsgdState, grad: &ParamVector, alpha: f64, eps: f64) -> Result<MsgdState, Divergence> {
    let mut next = state.clone();
    next.step(grad, alpha, eps)?;
    Ok(next)
}

pub fn shb_step(state: &ShbState, grad: &ParamVector, beta: f64, gamma: f64) -> Result<ShbState, Divergence> {
    let mut next = state.clone();
    next.step(grad, beta, gamma)?;
    Ok(next)
}

pub fn adagrad_norm_step(state: &AdagradNormState, grad: &ParamVector, alpha0: f64) -> Result<AdagradNormState, Divergence> {
    let mut next = state.clone();
    next.step(grad, alpha0)?;
    Ok(next)
}

pub fn adagrad_coord_step(state: &AdagradCoordState, grad: &ParamVector, alpha0: f64) -> Result<AdagradCoordState, Divergence> {
    let mut next = state.clone();
    next.step(grad, alpha0)?;
    Ok(next)
}

/// mSGD parameters reproducing one SHB step when `γ_n v_n` plays the role of the mSGD buffer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MappedParams {
    pub alpha: f64,
    pub epsilon: f64,
}

/// `α_n = (γ_n / γ_{n−1}) β_n`, `ε_n = γ_n (1 − β_n)`.
pub fn map_shb_to_msgd(gamma_n: f64, gamma_prev: f64, beta_n: f64) -> MappedParams {
    MappedParams {
        alpha: gamma_n / gamma_prev * beta_n,
        epsilon: gamma_n * (1.0 - beta_n),
    }
}

/// Algorithm choice together with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Algorithm {
    Sgd {
        #[serde(default = "default_epsilon")]
        epsilon: StepSchedule,
    },
    Msgd {
        alpha: f64,
        #[serde(default = "default_epsilon")]
        epsilon: StepSchedule,
    },
    Shb { beta: StepSchedule, gamma: StepSchedule },
    AdagradNorm { alpha0: f64 },
    AdagradCoord { alpha0: f64 },
}

/// `ε_n = 1/n` when a configuration leaves the step size out.
fn default_epsilon() -> StepSchedule {
    StepSchedule::harmonic(1.0).expect("valid schedule")
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Sgd { .. } => "sgd",
            Algorithm::Msgd { .. } => "msgd",
            Algorithm::Shb { .. } => "shb",
            Algorithm::AdagradNorm { .. } => "adagrad_norm",
            Algorithm::AdagradCoord { .. } => "adagrad_coord",
        }
    }

    pub fn validate(&self) -> Result<(), HyperParamError> {
        match *self {
            Algorithm::Msgd { alpha, .. } if !(0.0..1.0).contains(&alpha) => Err(HyperParamError::Alpha(alpha)),
            Algorithm::AdagradNorm { alpha0 } | Algorithm::AdagradCoord { alpha0 } if !(alpha0.is_finite() && alpha0 > 0.0) => {
                Err(HyperParamError::Alpha0(alpha0))
            }
            // Schedules are nonincreasing, so β_1 is the largest value.
            Algorithm::Shb { beta, .. } if beta.value(1) >= 1.0 => Err(HyperParamError::Beta(beta.value(1))),
            _ => Ok(()),
        }
    }

    pub fn is_momentum(&self) -> bool {
        matches!(self, Algorithm::Sgd { .. } | Algorithm::Msgd { .. } | Algorithm::Shb { .. })
    }

    pub fn is_adagrad(&self) -> bool {
        matches!(self, Algorithm::AdagradNorm { .. } | Algorithm::AdagradCoord { .. })
    }

    /// The mSGD-form step-size schedule `ε_n`, if the algorithm has one.
    pub fn epsilon_schedule(&self) -> Option<StepSchedule> {
        match *self {
            Algorithm::Sgd { epsilon } | Algorithm::Msgd { epsilon, .. } => Some(epsilon),
            _ => None,
        }
    }

    /// Momentum coefficient in mSGD form (`0` for SGD, mapped at `n` for SHB).
    pub fn momentum_at(&self, n: u64) -> Option<f64> {
        match *self {
            Algorithm::Sgd { .. } => Some(0.0),
            Algorithm::Msgd { alpha, .. } => Some(alpha),
            Algorithm::Shb { beta, gamma } => Some(shb_mapping(beta, gamma, n).alpha),
            _ => None,
        }
    }

    /// Step size in mSGD form at step `n`.
    pub fn mapped_epsilon_at(&self, n: u64) -> Option<f64> {
        match *self {
            Algorithm::Sgd { epsilon } | Algorithm::Msgd { epsilon, .. } => Some(epsilon.value(n)),
            Algorithm::Shb { beta, gamma } => Some(shb_mapping(beta, gamma, n).epsilon),
            _ => None,
        }
    }
}

/// Mapped parameters at step `n`. At `n = 1` without a defined `γ_0` the
/// ratio is taken as 1, which is exact whenever `v_0 = 0`.
pub fn shb_mapping(beta: StepSchedule, gamma: StepSchedule, n: u64) -> MappedParams {
    let gamma_n = gamma.value(n);
    let gamma_prev = if n == 1 {
        gamma.value_at_zero().unwrap_or(gamma_n)
    } else {
        gamma.value(n - 1)
    };
    map_shb_to_msgd(gamma_n, gamma_prev, beta.value(n))
}

/// What one step did, for trajectory bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    /// `ε_n` in mSGD form, or `α0/√S_n` for AdaGrad (0 on a skipped update).
    pub effective_step: f64,
    /// `‖v_n‖²` of the mSGD-form buffer (`θ_n − θ_{n+1}` for SGD/mSGD/SHB).
    pub momentum_sq: Option<f64>,
}

/// Runtime state for any algorithm.
#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerState {
    Sgd(SgdState),
    Msgd(MsgdState),
    Shb(ShbState),
    AdagradNorm(AdagradNormState),
    AdagradCoord(AdagradCoordState),
}

impl OptimizerState {
    /// Initial state at `θ_1`; `v0` defaults to zero and is ignored by SGD and AdaGrad.
    pub fn init(alg: &Algorithm, theta1: ParamVector, v0: Option<ParamVector>) -> Self {
        let dim = theta1.dim();
        let v0 = v0.unwrap_or_else(|| ParamVector::zeros(dim));
        match alg {
            Algorithm::Sgd { .. } => OptimizerState::Sgd(SgdState::new(theta1)),
            Algorithm::Msgd { .. } => OptimizerState::Msgd(MsgdState::new(theta1, v0)),
            Algorithm::Shb { .. } => OptimizerState::Shb(ShbState::new(theta1, v0)),
            Algorithm::AdagradNorm { .. } => OptimizerState::AdagradNorm(AdagradNormState::new(theta1)),
            Algorithm::AdagradCoord { .. } => OptimizerState::AdagradCoord(AdagradCoordState::new(theta1)),
        }
    }

    pub fn theta(&self) -> &ParamVector {
        match self {
            OptimizerState::Sgd(s) => &s.theta,
            OptimizerState::Msgd(s) => &s.theta,
            OptimizerState::Shb(s) => &s.theta,
            OptimizerState::AdagradNorm(s) => &s.theta,
            OptimizerState::AdagradCoord(s) => &s.theta,
        }
    }

    /// Index of the next step.
    pub fn n(&self) -> u64 {
        match self {
            OptimizerState::Sgd(s) => s.n,
            OptimizerState::Msgd(s) => s.n,
            OptimizerState::Shb(s) => s.n,
            OptimizerState::AdagradNorm(s) => s.n,
            OptimizerState::AdagradCoord(s) => s.n,
        }
    }

    /// AdaGrad accumulator `S_{n−1}` (sum of coordinates for the coordinate form).
    pub fn accumulator(&self) -> Option<f64> {
        match self {
            OptimizerState::AdagradNorm(s) => Some(s.s),
            OptimizerState::AdagradCoord(s) => Some(s.total()),
            _ => None,
        }
    }

    /// Advances one step with the given gradient sample. Panics if `alg` does
    /// not match the state variant.
    pub fn step(&mut self, alg: &Algorithm, grad: &ParamVector) -> Result<StepInfo, Divergence> {
        match (self, *alg) {
            (OptimizerState::Sgd(s), Algorithm::Sgd { epsilon }) => {
                let eps = epsilon.value(s.n);
                s.step(grad, eps)?;
                Ok(StepInfo {
                    effective_step: eps,
                    momentum_sq: Some(eps * eps * grad.norm_sq()),
                })
            }
            (OptimizerState::Msgd(s), Algorithm::Msgd { alpha, epsilon }) => {
                let eps = epsilon.value(s.n);
                s.step(grad, alpha, eps)?;
                Ok(StepInfo {
                    effective_step: eps,
                    momentum_sq: Some(s.v.norm_sq()),
                })
            }
            (OptimizerState::Shb(s), Algorithm::Shb { beta, gamma }) => {
                let n = s.n;
                let (b, g) = (beta.value(n), gamma.value(n));
                s.step(grad, b, g)?;
                Ok(StepInfo {
                    effective_step: g * (1.0 - b),
                    momentum_sq: Some(g * g * s.v.norm_sq()),
                })
            }
            (OptimizerState::AdagradNorm(s), Algorithm::AdagradNorm { alpha0 }) => {
                s.step(grad, alpha0)?;
                Ok(StepInfo {
                    effective_step: if s.s > 0.0 { alpha0 / s.s.sqrt() } else { 0.0 },
                    momentum_sq: None,
                })
            }
            (OptimizerState::AdagradCoord(s), Algorithm::AdagradCoord { alpha0 }) => {
                s.step(grad, alpha0)?;
                let total = s.total();
                Ok(StepInfo {
                    effective_step: if total > 0.0 { alpha0 / total.sqrt() } else { 0.0 },
                    momentum_sq: None,
                })
            }
            (state, alg) => panic!("state {:?} does not match algorithm {}", std::mem::discriminant(state), alg.name()),
        }
    }
}
