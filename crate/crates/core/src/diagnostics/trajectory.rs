use serde::Serialize;

use super::DiagnosticsError;
use crate::objectives::Objective;
use crate::optimizers::{Algorithm, OptimizerState};
use crate::oracles::{GradientOracle, OracleKind};
use crate::param::ParamVector;
use crate::rng::RngStream;
use crate::status::RunStatus;

/// `1/2 + ε` with `ε = 0.1`, the accumulator power in the AdaGrad summability series.
pub const LEMMA8_EXPONENT: f64 = 0.6;

/// Everything that defines one run except its random stream.
#[derive(Debug, Clone)]
pub struct RunSpec<'a> {
    pub objective: &'a Objective,
    pub oracle: OracleKind,
    pub algorithm: Algorithm,
    pub theta1: ParamVector,
    pub v0: Option<ParamVector>,
    pub horizon: u64,
    pub stride: u64,
}

/// Per-run metric series, thinned by `stride`.
///
/// Row `k` describes the iterate `θ_n` with `n = n[k]`, i.e. after `n − 1`
/// steps. Rows are kept at `n = 1, 1 + stride, 1 + 2 stride, ...` and at
/// the final iterate `n = horizon + 1`. Cumulative series sum over the steps
/// executed before reaching `θ_n`, except `cum_grad_sq` which also includes
/// `θ_n` itself so that `cum_grad_sq / n` is the exact time average.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub base_seed: u64,
    pub run_index: u64,
    pub n: Vec<u64>,
    /// `g(θ_n)`
    pub g: Vec<f64>,
    /// `‖∇g(θ_n)‖²` of the true gradient.
    pub grad_sq: Vec<f64>,
    /// `d(θ_n, J)`
    pub dist_j: Vec<f64>,
    /// `‖v_{n−1}‖²` of the mSGD-form buffer (momentum methods).
    pub v_sq: Option<Vec<f64>>,
    /// `S_{n−1}` (AdaGrad).
    pub s: Option<Vec<f64>>,
    /// `Σ_{t<n} ε_t ‖∇g(θ_t)‖²`
    pub cum_eps_grad_sq: Vec<f64>,
    /// `Σ_{t≤n} ‖∇g(θ_t)‖²`
    pub cum_grad_sq: Vec<f64>,
    /// `Σ_{t<n} ‖v_t‖²` (momentum methods).
    pub cum_v_sq: Option<Vec<f64>>,
    /// `Σ_{3≤k<n} ‖∇g(θ_k)‖² / S_{k−1}^{0.6}` (AdaGrad).
    pub cum_adagrad_ratio: Option<Vec<f64>>,
    /// `S_n ≥ S_{n−1}` held at every executed step (always true for non-AdaGrad runs).
    pub accumulator_monotone: bool,
    pub final_theta: ParamVector,
    pub status: RunStatus,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n.is_empty()
    }
}

struct Row {
    momentum_sq: f64,
    cum_eps: f64,
    cum_grad: f64,
    cum_v: f64,
    cum_ratio: f64,
}

/// Runs one trajectory. Divergence ends the run early and is reported in
/// the record's status rather than as an error.
pub fn run_trajectory(spec: &RunSpec<'_>, rng: &mut RngStream) -> Result<TrajectoryRecord, DiagnosticsError> {
    if spec.horizon == 0 {
        return Err(DiagnosticsError::ZeroHorizon);
    }
    if spec.stride == 0 {
        return Err(DiagnosticsError::ZeroStride);
    }
    let obj = spec.objective;
    let dim = obj.dim();
    for p in std::iter::once(&spec.theta1).chain(spec.v0.as_ref()) {
        if p.dim() != dim {
            return Err(DiagnosticsError::Dimension { expected: dim, got: p.dim() });
        }
    }
    let oracle = GradientOracle::new(spec.oracle, obj)?;
    let alg = spec.algorithm;
    let momentum = alg.is_momentum();
    let adagrad = alg.is_adagrad();

    let mut state = OptimizerState::init(&alg, spec.theta1.clone(), spec.v0.clone());
    let capacity = (spec.horizon / spec.stride + 2) as usize;
    let mut rec = TrajectoryRecord {
        base_seed: rng.base_seed(),
        run_index: rng.substream_id(),
        n: Vec::with_capacity(capacity),
        g: Vec::with_capacity(capacity),
        grad_sq: Vec::with_capacity(capacity),
        dist_j: Vec::with_capacity(capacity),
        v_sq: momentum.then(|| Vec::with_capacity(capacity)),
        s: adagrad.then(|| Vec::with_capacity(capacity)),
        cum_eps_grad_sq: Vec::with_capacity(capacity),
        cum_grad_sq: Vec::with_capacity(capacity),
        cum_v_sq: momentum.then(|| Vec::with_capacity(capacity)),
        cum_adagrad_ratio: adagrad.then(|| Vec::with_capacity(capacity)),
        accumulator_monotone: true,
        final_theta: spec.theta1.clone(),
        status: RunStatus::completed(0),
    };

    let mut true_grad = ParamVector::zeros(dim);
    let mut sample = ParamVector::zeros(dim);
    obj.grad_into(state.theta(), &mut true_grad);
    let mut row = Row {
        momentum_sq: spec.v0.as_ref().map_or(0.0, |v| v.norm_sq()),
        cum_eps: 0.0,
        cum_grad: true_grad.norm_sq(),
        cum_v: 0.0,
        cum_ratio: 0.0,
    };
    push_row(&mut rec, obj, &state, &true_grad, 1, &row);

    for step in 1..=spec.horizon {
        // true_grad holds ∇g(θ_step) here.
        let grad_sq = true_grad.norm_sq();
        let acc_before = state.accumulator();
        oracle.sample_given_grad_into(state.theta(), &true_grad, rng, &mut sample);
        let info = match state.step(&alg, &sample) {
            Ok(info) => info,
            Err(div) => {
                rec.status = RunStatus::diverged(div.step);
                rec.final_theta = state.theta().clone();
                return Ok(rec);
            }
        };
        row.cum_eps += info.effective_step * grad_sq;
        if let Some(m) = info.momentum_sq {
            row.momentum_sq = m;
            row.cum_v += m;
        }
        if let (Some(before), Some(after)) = (acc_before, state.accumulator()) {
            if after < before {
                rec.accumulator_monotone = false;
            }
            if step >= 3 && before > 0.0 {
                row.cum_ratio += grad_sq / before.powf(LEMMA8_EXPONENT);
            }
        }
        obj.grad_into(state.theta(), &mut true_grad);
        row.cum_grad += true_grad.norm_sq();
        let n = step + 1;
        if step % spec.stride == 0 || step == spec.horizon {
            push_row(&mut rec, obj, &state, &true_grad, n, &row);
        }
    }

    rec.final_theta = state.theta().clone();
    rec.status = if adagrad && state.accumulator() == Some(0.0) {
        RunStatus::degenerate(spec.horizon)
    } else {
        RunStatus::completed(spec.horizon)
    };
    Ok(rec)
}

fn push_row(rec: &mut TrajectoryRecord, obj: &Objective, state: &OptimizerState, true_grad: &ParamVector, n: u64, row: &Row) {
    let theta = state.theta();
    rec.n.push(n);
    rec.g.push(obj.eval(theta));
    rec.grad_sq.push(true_grad.norm_sq());
    rec.dist_j.push(obj.distance_unchecked(theta));
    rec.cum_eps_grad_sq.push(row.cum_eps);
    rec.cum_grad_sq.push(row.cum_grad);
    if let Some(v) = rec.v_sq.as_mut() {
        v.push(row.momentum_sq);
    }
    if let Some(c) = rec.cum_v_sq.as_mut() {
        c.push(row.cum_v);
    }
    if let Some(s) = rec.s.as_mut() {
        s.push(state.accumulator().unwrap_or(0.0));
    }
    if let Some(c) = rec.cum_adagrad_ratio.as_mut() {
        c.push(row.cum_ratio);
    }
}
