use momentum_lab::diagnostics::{run_ensemble, RunSpec};
use momentum_lab::optimizers::{
    adagrad_norm_step, msgd_step, AdagradCoordState, AdagradNormState, MsgdState, ShbState,
};
use momentum_lab::oracles::theoretical_noise_constants;
use momentum_lab::{catalog, rng_substream, Algorithm, GradientOracle, Objective, OracleKind, ParamVector, StepSchedule};
use proptest::prelude::*;

fn oracles_for(obj: &Objective) -> Vec<OracleKind> {
    let mut kinds = vec![OracleKind::Exact, OracleKind::AdditiveGaussian { sigma: 0.3 }];
    if obj.finite_sum_len().is_some() {
        kinds.push(OracleKind::FiniteSumUniform);
    }
    kinds
}

fn window_point(obj: &Objective, rng: &mut momentum_lab::RngStream) -> ParamVector {
    let w = obj.window();
    // The inner half of the window keeps quartic gradients moderate.
    ParamVector::new((0..obj.dim()).map(|j| 0.5 * rng.uniform_in(w.lower[j], w.upper[j])).collect())
}

/// Sample mean and standard error of `f` over `k` oracle draws.
fn moment(oracle: &GradientOracle<'_>, theta: &ParamVector, k: usize, seed: u64, f: impl Fn(&ParamVector) -> f64) -> (f64, f64) {
    let mut rng = rng_substream(seed, 1);
    let xs: Vec<f64> = (0..k).map(|_| f(&oracle.sample(theta, &mut rng))).collect();
    let mean = xs.iter().sum::<f64>() / k as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k as f64 - 1.0);
    (mean, (var / k as f64).sqrt())
}

#[test]
fn oracles_are_unbiased() {
    let mut rng = rng_substream(11, 0);
    for obj in catalog() {
        for kind in oracles_for(&obj) {
            let oracle = GradientOracle::new(kind, &obj).unwrap();
            for p in 0..10 {
                let theta = window_point(&obj, &mut rng);
                let grad = obj.grad(&theta);
                if let Some(weighted) = oracle.enumerate(&theta) {
                    let mut mean = ParamVector::zeros(obj.dim());
                    for (w, g) in &weighted {
                        mean.axpy(*w, g);
                    }
                    assert!(mean.distance(&grad) <= 1e-12 * (1.0 + grad.norm()), "{} {kind:?}", obj.id());
                    continue;
                }
                for j in 0..obj.dim() {
                    let (m, se) = moment(&oracle, &theta, 20_000, 100 + p, |s| s.as_slice()[j]);
                    let target = grad.as_slice()[j];
                    assert!((m - target).abs() <= 4.0 * se + 1e-12, "{} {kind:?}: {m} vs {target} (se {se})", obj.id());
                }
            }
        }
    }
}

#[test]
fn noise_conditions_hold_with_the_stated_constants() {
    let mut rng = rng_substream(12, 0);
    for obj in catalog() {
        for kind in oracles_for(&obj).into_iter().filter(|k| *k != OracleKind::Exact) {
            let oracle = GradientOracle::new(kind, &obj).unwrap();
            let c = theoretical_noise_constants(&oracle);
            for p in 0..10 {
                let theta = window_point(&obj, &mut rng);
                let grad = obj.grad(&theta);
                let g = obj.eval(&theta);
                let (dev, se) = moment(&oracle, &theta, 20_000, 200 + p, |s| s.distance(&grad).powi(2));
                assert!(dev <= c.m * (1.0 + g) + 3.0 * se + 1e-9, "{} {kind:?}: {dev} > M(1+g)", obj.id());
                let (second, se) = moment(&oracle, &theta, 20_000, 300 + p, ParamVector::norm_sq);
                assert!(second <= c.m_prime * grad.norm_sq() + c.a + 3.0 * se + 1e-9, "{} {kind:?}", obj.id());
            }
        }
    }
}

#[test]
fn successive_noise_draws_are_uncorrelated() {
    let obj = Objective::finite_sum_quad(vec![ParamVector::scalar(-1.0), ParamVector::scalar(1.0)]).unwrap();
    for kind in [OracleKind::AdditiveGaussian { sigma: 1.0 }, OracleKind::FiniteSumUniform] {
        let oracle = GradientOracle::new(kind, &obj).unwrap();
        let theta = ParamVector::scalar(0.3);
        let grad = obj.grad(&theta).as_slice()[0];
        let mut rng = rng_substream(5, 9);
        let xs: Vec<f64> = (0..100_000).map(|_| oracle.sample(&theta, &mut rng).as_slice()[0] - grad).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
        let lag1: f64 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        assert!((lag1 / var).abs() < 0.02, "{kind:?}: {}", lag1 / var);
    }
}

#[test]
fn msgd_converges_from_a_nonzero_momentum_buffer() {
    let obj = Objective::quad(1.0, 2).unwrap();
    let spec = RunSpec {
        objective: &obj,
        oracle: OracleKind::AdditiveGaussian { sigma: 0.1 },
        algorithm: Algorithm::Msgd { alpha: 0.8, epsilon: StepSchedule::harmonic(0.5).unwrap() },
        theta1: ParamVector::new(vec![2.0, -1.0]),
        v0: Some(ParamVector::new(vec![-3.0, 5.0])),
        horizon: 20_000,
        stride: 100,
    };
    let summary = run_ensemble(&spec, 32, 1).unwrap();
    assert_eq!(summary.diverged, 0);
    assert!(*summary.dist_j.q90.last().unwrap() < 0.02);
}

fn grads(dim: usize) -> impl Strategy<Value = Vec<ParamVector>> {
    prop::collection::vec(prop::collection::vec(-5.0f64..5.0, dim).prop_map(ParamVector::new), 1..200)
}

proptest! {
    #[test]
    fn adagrad_forms_coincide_in_one_dimension(
        theta in -3.0f64..3.0,
        alpha0 in 0.01f64..2.0,
        seq in grads(1),
    ) {
        let mut norm = AdagradNormState::new(ParamVector::scalar(theta));
        let mut coord = AdagradCoordState::new(ParamVector::scalar(theta));
        for g in &seq {
            norm.step(g, alpha0).unwrap();
            coord.step(g, alpha0).unwrap();
            prop_assert_eq!(norm.theta.as_slice()[0].to_bits(), coord.theta.as_slice()[0].to_bits());
            prop_assert_eq!(norm.s.to_bits(), coord.total().to_bits());
        }
    }

    #[test]
    fn adagrad_accumulator_and_step_are_monotone(
        alpha0 in 0.01f64..2.0,
        zeros in 0usize..4,
        seq in grads(3),
    ) {
        let mut state = AdagradNormState::new(ParamVector::new(vec![1.0, -2.0, 0.5]));
        let start = state.theta.clone();
        // Leading zero gradients leave S at zero and skip the update.
        for _ in 0..zeros {
            state.step(&ParamVector::zeros(3), alpha0).unwrap();
            prop_assert_eq!(&state.theta, &start);
            prop_assert_eq!(state.s, 0.0);
        }
        let mut prev_s = state.s;
        let mut prev_step = f64::INFINITY;
        for g in &seq {
            if state.step(g, alpha0).is_err() {
                break;
            }
            prop_assert!(state.s >= prev_s);
            if state.s > 0.0 {
                let step = alpha0 / state.s.sqrt();
                prop_assert!(step <= prev_step);
                prev_step = step;
            }
            prev_s = state.s;
        }
    }

    #[test]
    fn steps_are_pure(
        theta in prop::collection::vec(-3.0f64..3.0, 2),
        v in prop::collection::vec(-1.0f64..1.0, 2),
        g in prop::collection::vec(-5.0f64..5.0, 2),
        alpha in 0.0f64..0.99,
        eps in 1e-4f64..1.0,
    ) {
        let state = MsgdState::new(ParamVector::new(theta.clone()), ParamVector::new(v));
        let g = ParamVector::new(g);
        let a = msgd_step(&state, &g, alpha, eps).unwrap();
        let b = msgd_step(&state, &g, alpha, eps).unwrap();
        prop_assert_eq!(&a, &b);
        let mut in_place = state.clone();
        in_place.step(&g, alpha, eps).unwrap();
        prop_assert_eq!(&a, &in_place);

        let ada = AdagradNormState::new(ParamVector::new(theta));
        prop_assert_eq!(adagrad_norm_step(&ada, &g, 0.5).unwrap(), adagrad_norm_step(&ada, &g, 0.5).unwrap());
    }

    #[test]
    fn heavy_ball_matches_mapped_msgd(
        beta in 0.0f64..0.99,
        c0 in 0.01f64..1.0,
        gamma_exp in 0.501f64..=1.0,
        seq in grads(2),
    ) {
        let beta_s = StepSchedule::constant(beta).unwrap();
        let gamma_s = StepSchedule::power(c0, gamma_exp, 0).unwrap();
        let alg = Algorithm::Shb { beta: beta_s, gamma: gamma_s };
        let theta1 = ParamVector::new(vec![1.0, -1.0]);
        let mut shb = ShbState::new(theta1.clone(), ParamVector::zeros(2));
        let mut msgd = MsgdState::new(theta1, ParamVector::zeros(2));
        for (k, g) in seq.iter().enumerate() {
            let n = k as u64 + 1;
            shb.step(g, beta_s.value(n), gamma_s.value(n)).unwrap();
            msgd.step(g, alg.momentum_at(n).unwrap(), alg.mapped_epsilon_at(n).unwrap()).unwrap();
            for j in 0..2 {
                let (a, b) = (shb.theta.as_slice()[j], msgd.theta.as_slice()[j]);
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(b.abs()) + 1e-13, "θ {a} vs {b}");
                let (a, b) = (gamma_s.value(n) * shb.v.as_slice()[j], msgd.v.as_slice()[j]);
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(b.abs()) + 1e-13, "v {a} vs {b}");
            }
        }
    }

    #[test]
    fn schedules_are_positive_and_nonincreasing(
        c0 in 1e-3f64..10.0,
        gamma in 0.501f64..=1.0,
        n0 in 0u64..100,
        n in 1u64..10_000_000,
    ) {
        let s = StepSchedule::power(c0, gamma, n0).unwrap();
        let (a, b) = (s.value(n), s.value(n + 1));
        prop_assert!(a > 0.0 && a.is_finite());
        prop_assert!(b <= a);
        prop_assert_eq!(a.to_bits(), s.value(n).to_bits());
    }
}
