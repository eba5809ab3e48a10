//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::OnceLock;
use std::time::Instant;

use momentum_lab::assumptions::{estimate_lipschitz, AssumptionSettings, estimate_local_pl_s, estimate_mprime_a};
use momentum_lab::cli::{compare, parse_config, Metric};
use momentum_lab::diagnostics::{
    classify_time_average_order, compute_p, lemma_suite, loglog_slope, predicted_time_average_slope, run_ensemble_records,
    run_trajectory, time_average, LemmaCheck, RunSpec, TimeAverageOrder, TrajectoryRecord, Verdict,
};
use momentum_lab::optimizers::{MsgdState, ShbState};
use momentum_lab::{
    catalog, rng_substream, Algorithm, GradientOracle, Objective, OracleKind, Outcome, ParamVector, Region, StepSchedule,
};

struct Finding {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Finding);

fn verdict(pass: bool, detail: impl Into<String>) -> Finding {
    Finding { pass, detail: detail.into() }
}

const SEED: u64 = 20240611;
const RUNS: u64 = 200;
const LONG: u64 = 100_000;

fn harmonic(c0: f64) -> StepSchedule {
    StepSchedule::harmonic(c0).unwrap()
}

fn sin2() -> &'static Objective {
    static OBJ: OnceLock<Objective> = OnceLock::new();
    OBJ.get_or_init(Objective::sin2)
}

fn msgd_sin2_alg() -> Algorithm {
    Algorithm::Msgd { alpha: 0.9, epsilon: harmonic(0.5) }
}

fn adagrad_sin2_alg() -> Algorithm {
    Algorithm::AdagradNorm { alpha0: 0.5 }
}

fn sin2_spec(algorithm: Algorithm) -> RunSpec<'static> {
    RunSpec {
        objective: sin2(),
        oracle: OracleKind::AdditiveGaussian { sigma: 0.1 },
        algorithm,
        theta1: ParamVector::scalar(0.8),
        v0: algorithm.is_momentum().then(|| ParamVector::scalar(0.0)),
        horizon: LONG,
        stride: 10,
    }
}

/// Ensemble of criterion 1 together with its wall-clock time in seconds.
fn msgd_sin2() -> &'static (Vec<TrajectoryRecord>, f64) {
    static CELL: OnceLock<(Vec<TrajectoryRecord>, f64)> = OnceLock::new();
    CELL.get_or_init(|| {
        let t = Instant::now();
        let records = run_ensemble_records(&sin2_spec(msgd_sin2_alg()), RUNS, SEED).unwrap();
        (records, t.elapsed().as_secs_f64())
    })
}

fn adagrad_sin2() -> &'static (Vec<TrajectoryRecord>, f64) {
    static CELL: OnceLock<(Vec<TrajectoryRecord>, f64)> = OnceLock::new();
    CELL.get_or_init(|| {
        let t = Instant::now();
        let records = run_ensemble_records(&sin2_spec(adagrad_sin2_alg()), RUNS, SEED).unwrap();
        (records, t.elapsed().as_secs_f64())
    })
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    if k % 2 == 1 {
        xs[k / 2]
    } else {
        0.5 * (xs[k / 2 - 1] + xs[k / 2])
    }
}

fn completed(records: &[TrajectoryRecord]) -> impl Iterator<Item = &TrajectoryRecord> {
    records.iter().filter(|r| r.status.outcome != Outcome::Diverged)
}

fn msgd_convergence() -> Finding {
    let (records, secs) = msgd_sin2();
    let close = records
        .iter()
        .filter(|r| r.status.outcome == Outcome::Completed && *r.dist_j.last().unwrap() < 0.05)
        .count();
    let share = close as f64 / records.len() as f64;

    // Median distance at quarter-decade checkpoints across the last decade.
    let n = &records[0].n;
    let last = *n.last().unwrap() - 1;
    let checkpoints: Vec<usize> = (0..=4)
        .map(|k| {
            let target = (last as f64 * 10f64.powf(-1.0 + 0.25 * k as f64)).round() as u64;
            n.iter().rposition(|&m| m <= target.max(1)).unwrap()
        })
        .collect();
    let medians: Vec<f64> = checkpoints
        .iter()
        .map(|&row| median(completed(records).map(|r| r.dist_j[row]).collect()))
        .collect();
    let monotone = medians.windows(2).all(|w| w[1] <= w[0]);
    let pass = share >= 0.95 && monotone && *secs < 60.0;
    verdict(
        pass,
        format!(
            "{:.1}% of runs within 0.05, checkpoint medians [{}], {secs:.1} s",
            100.0 * share,
            medians.iter().map(|m| format!("{m:.3e}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn bits(xs: &[f64]) -> Vec<u64> {
    xs.iter().map(|x| x.to_bits()).collect()
}

fn alpha_zero_reduction() -> Finding {
    let mut mismatched = Vec::new();
    for obj in catalog() {
        let oracle = if obj.finite_sum_len().is_some() {
            OracleKind::FiniteSumUniform
        } else {
            OracleKind::AdditiveGaussian { sigma: 0.1 }
        };
        let c0 = 0.5 / obj.known_lipschitz().unwrap_or(1.0).max(1.0);
        let spec = |algorithm| RunSpec {
            objective: &obj,
            oracle,
            algorithm,
            theta1: ParamVector::new(vec![0.8; obj.dim()]),
            v0: None,
            horizon: 10_000,
            stride: 1,
        };
        let sgd = run_trajectory(&spec(Algorithm::Sgd { epsilon: harmonic(c0) }), &mut rng_substream(SEED, 3)).unwrap();
        let msgd = run_trajectory(&spec(Algorithm::Msgd { alpha: 0.0, epsilon: harmonic(c0) }), &mut rng_substream(SEED, 3)).unwrap();
        let same = sgd.n == msgd.n
            && sgd.status == msgd.status
            && bits(sgd.final_theta.as_slice()) == bits(msgd.final_theta.as_slice())
            && bits(&sgd.g) == bits(&msgd.g)
            && bits(&sgd.grad_sq) == bits(&msgd.grad_sq)
            && bits(&sgd.dist_j) == bits(&msgd.dist_j)
            && bits(&sgd.cum_eps_grad_sq) == bits(&msgd.cum_eps_grad_sq);
        if !same {
            mismatched.push(obj.id().to_string());
        }
    }
    if mismatched.is_empty() {
        verdict(true, "bit-identical on every catalog objective over 10000 steps")
    } else {
        verdict(false, format!("trajectories differ on {mismatched:?}"))
    }
}

fn rel_dev(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn shb_mapping() -> Finding {
    let obj = Objective::quad(1.0, 1).unwrap();
    let oracle = GradientOracle::new(OracleKind::AdditiveGaussian { sigma: 0.1 }, &obj).unwrap();
    let (beta, gamma) = (StepSchedule::constant(0.9).unwrap(), harmonic(0.5));
    let alg = Algorithm::Shb { beta, gamma };
    let theta1 = ParamVector::scalar(1.0);
    let mut shb = ShbState::new(theta1.clone(), ParamVector::scalar(0.0));
    let mut msgd = MsgdState::new(theta1, ParamVector::scalar(0.0));
    // Identical streams give both methods the same noise draws.
    let (mut rng_a, mut rng_b) = (rng_substream(SEED, 0), rng_substream(SEED, 0));
    let (mut max_theta, mut max_v) = (0.0f64, 0.0f64);
    for n in 1..=10_000u64 {
        let g_a = oracle.sample(&shb.theta, &mut rng_a);
        let g_b = oracle.sample(&msgd.theta, &mut rng_b);
        shb.step(&g_a, beta.value(n), gamma.value(n)).unwrap();
        msgd.step(&g_b, alg.momentum_at(n).unwrap(), alg.mapped_epsilon_at(n).unwrap()).unwrap();
        max_theta = max_theta.max(rel_dev(shb.theta.as_slice()[0], msgd.theta.as_slice()[0]));
        max_v = max_v.max(rel_dev(gamma.value(n) * shb.v.as_slice()[0], msgd.v.as_slice()[0]));
    }
    verdict(
        max_theta < 1e-9 && max_v < 1e-9,
        format!("max relative deviation θ {max_theta:.2e}, γv vs v {max_v:.2e}"),
    )
}

fn momentum_ordering() -> Finding {
    let configs: Vec<(String, _)> = [0.0, 0.5, 0.9]
        .iter()
        .map(|alpha| {
            let text = format!(
                "horizon = {LONG}\nruns = {RUNS}\nseed = {SEED}\nobjective = \"finite_sum_quad\"\noracle = \"finite_sum_uniform\"\n\
                 [algorithm]\nkind = \"msgd\"\nalpha = {alpha:?}\nepsilon = {{ family = \"power\", c0 = 0.5 }}\n"
            );
            (format!("alpha={alpha}"), parse_config(&text).unwrap())
        })
        .collect();
    let rows = match compare(&configs, Metric::DecayExponent) {
        Ok(rows) => rows,
        Err(e) => return verdict(false, e.to_string()),
    };
    // |λ̂| indexed by α in input order.
    let mut by_alpha = [0.0; 3];
    for r in &rows {
        by_alpha[r.index] = r.value.abs();
    }
    let dominance = by_alpha[2] >= by_alpha[0] - 0.05;
    let table_order: Vec<usize> = rows.iter().map(|r| r.index).collect();
    let inversions: Vec<f64> = (0..2).filter(|&i| by_alpha[i] > by_alpha[i + 1]).map(|i| by_alpha[i] - by_alpha[i + 1]).collect();
    let ordered = inversions.len() <= 1 && inversions.iter().all(|&gap| gap <= 0.05);
    verdict(
        dominance && ordered,
        format!("|λ̂| for α = 0, 0.5, 0.9: {by_alpha:.4?}; table order {table_order:?}"),
    )
}

fn trichotomy() -> Finding {
    let start = Instant::now();
    let horizon = 1_000_000usize;
    let ts: Vec<f64> = (0..=120).map(|k| (1e3 * 10f64.powf(3.0 * k as f64 / 120.0)).round()).collect();
    let mut notes = Vec::new();
    let mut pass = true;
    for q in [0.3, 1.0, 2.0] {
        let series: Vec<f64> = (1..=horizon).map(|n| (n as f64).powf(-q)).collect();
        let averaged = time_average(&series);
        let ys: Vec<f64> = ts.iter().map(|&t| averaged[t as usize - 1]).collect();
        let measured = loglog_slope(&ts, &ys).unwrap();
        let order = classify_time_average_order(q);
        let predicted = predicted_time_average_slope(order, &ts).unwrap();
        pass &= (measured - predicted).abs() < 0.1;
        if order == TimeAverageOrder::LogOverT {
            // The log factor shows when the slope sits closer to its
            // log-corrected prediction than to −1.
            pass &= (measured - predicted).abs() < (measured + 1.0).abs();
        }
        notes.push(format!("q={q}: {measured:.4} vs {predicted:.4}"));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 5.0;
    verdict(pass, format!("{}, {secs:.2} s", notes.join("; ")))
}

fn adagrad_convergence() -> Finding {
    let (records, secs) = adagrad_sin2();
    let grad = median(records.iter().map(|r| r.grad_sq.last().unwrap().sqrt()).collect());
    let dist = median(records.iter().map(|r| *r.dist_j.last().unwrap()).collect());
    let monotone = records.iter().all(|r| r.accumulator_monotone && r.s.as_ref().unwrap().windows(2).all(|w| w[1] >= w[0]));
    let all_completed = records.iter().all(|r| r.status.outcome == Outcome::Completed);
    verdict(
        grad < 0.05 && dist < 0.1 && monotone && all_completed && *secs < 60.0,
        format!("median ‖∇g‖ {grad:.3e}, median d {dist:.3e}, S monotone in every run: {monotone}, {secs:.1} s"),
    )
}

fn lemma_suite_checks() -> Finding {
    let expect = |records: &[TrajectoryRecord], alg: Algorithm, checks: &[LemmaCheck]| -> Result<String, String> {
        let report = lemma_suite(records, &alg, 0.0).map_err(|e| e.to_string())?;
        let mut parts = Vec::new();
        let mut ok = true;
        for &check in checks {
            let r = report.get(check).ok_or_else(|| format!("{} missing", check.name()))?;
            ok &= r.verdict == Verdict::Pass;
            parts.push(format!("{} {:?} ({:.3e})", check.name(), r.verdict, r.value));
        }
        if ok {
            Ok(parts.join(", "))
        } else {
            Err(parts.join(", "))
        }
    };
    let momentum = expect(&msgd_sin2().0, msgd_sin2_alg(), &[LemmaCheck::L1, LemmaCheck::L5, LemmaCheck::L6]);
    let adagrad = expect(&adagrad_sin2().0, adagrad_sin2_alg(), &[LemmaCheck::L8, LemmaCheck::L9, LemmaCheck::L10]);

    let quad = Objective::quad(1.0, 1).unwrap();
    let divergent = Algorithm::Sgd { epsilon: StepSchedule::constant(3.0).unwrap() };
    let spec = RunSpec {
        objective: &quad,
        oracle: OracleKind::AdditiveGaussian { sigma: 0.1 },
        algorithm: divergent,
        theta1: ParamVector::scalar(1.0),
        v0: None,
        horizon: 1000,
        stride: 1,
    };
    let records = run_ensemble_records(&spec, 20, SEED).unwrap();
    let l1 = lemma_suite(&records, &divergent, 0.0).unwrap().get(LemmaCheck::L1).map(|r| r.verdict);

    let pass = momentum.is_ok() && adagrad.is_ok() && l1 == Some(Verdict::Fail);
    let show = |r: &Result<String, String>| match r {
        Ok(s) | Err(s) => s.clone(),
    };
    verdict(pass, format!("mSGD: {}; AdaGrad: {}; divergent SGD L1 {l1:?}", show(&momentum), show(&adagrad)))
}

fn constant_estimators() -> Finding {
    let mut rng = rng_substream(SEED, 8);
    let settings = AssumptionSettings::default();
    let (pairs, pl) = (settings.lipschitz_pairs, settings.pl_samples);
    let mut notes = Vec::new();
    let mut pass = true;

    let quad2 = Objective::quad(2.0, 1).unwrap();
    let c = estimate_lipschitz(&quad2, quad2.window(), pairs, &mut rng).unwrap().value;
    pass &= c == 2.0;
    notes.push(format!("ĉ(quad(2)) {c}"));

    let quad1 = Objective::quad(1.0, 1).unwrap();
    let s = estimate_local_pl_s(&quad1, 0, settings.pl_radius, pl, &mut rng).unwrap().value;
    pass &= (s - 2.0).abs() <= 1e-3;
    notes.push(format!("ŝ(quad(1)) {s:.6}"));

    let s = estimate_local_pl_s(sin2(), 0, settings.pl_radius, pl, &mut rng).unwrap().value;
    pass &= (3.8..=4.0).contains(&s);
    notes.push(format!("ŝ(sin2) {s:.4}"));

    for obj in catalog() {
        let c = estimate_lipschitz(&obj, obj.window(), pairs, &mut rng).unwrap().value;
        let components = obj.metadata().components.len();
        for i in 0..components {
            let s = estimate_local_pl_s(&obj, i, settings.pl_radius, pl, &mut rng).unwrap().value;
            if s > 2.0 * c + 1e-3 {
                pass = false;
                notes.push(format!("{} component {i}: ŝ {s} > 2ĉ {}", obj.id(), 2.0 * c));
            }
        }
    }

    for (dim, sigma) in [(1usize, 0.1), (4, 0.5)] {
        let obj = Objective::quad(1.0, dim).unwrap();
        let oracle = GradientOracle::new(OracleKind::AdditiveGaussian { sigma }, &obj).unwrap();
        let fit = estimate_mprime_a(&oracle, &Region::cube(dim, -1.0, 1.0), settings.fit_points, settings.samples_per_point, &mut rng).unwrap();
        let a = dim as f64 * sigma * sigma;
        pass &= (fit.m_prime - 1.0).abs() <= 0.05 && (fit.a - a).abs() <= 0.1 * a;
        notes.push(format!("N={dim} σ={sigma}: M̂′ {:.4}, â {:.4} (target {a:.4})", fit.m_prime, fit.a));
    }
    verdict(pass, notes.join("; "))
}

fn p_closed_form() -> Finding {
    let p = compute_p(1.0, &harmonic(1.0)).unwrap();
    // Smallest terms first.
    let partial: f64 = (1..=10_000_000u64).rev().map(|k| 1.0 / (k as f64 * k as f64)).sum();
    let brute = partial.exp();
    let err = (p - brute).abs() / p;
    verdict(err < 1e-6, format!("p {p:.12}, brute force {brute:.12}, relative error {err:.2e}"))
}

fn run_lab(config: &Path, out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_lab"))
        .args(["run", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    match status.status.code() {
        Some(0) | Some(1) => Ok(()),
        other => Err(format!("lab exited with {other:?}: {}", String::from_utf8_lossy(&status.stderr))),
    }
}

fn reproducibility() -> Finding {
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        "horizon = 3000\nruns = 16\nseed = 5\nobjective = \"sin2\"\ntheta1 = [0.8]\noracle = { kind = \"additive_gaussian\", sigma = 0.1 }\n\
         [algorithm]\nkind = \"msgd\"\nalpha = 0.9\nepsilon = { family = \"power\", c0 = 0.5 }\n\
         [checks]\nlemmas = true\nrate_fit = true\nassumptions = true\n",
        "horizon = 3000\nruns = 16\nseed = 6\nobjective = { id = \"quad\", c = 1.0, dim = 3 }\noracle = { kind = \"additive_gaussian\", sigma = 0.2 }\n\
         [algorithm]\nkind = \"adagrad_coord\"\nalpha0 = 0.5\n[checks]\nlemmas = true\nrate_fit = true\n",
    ];
    let mut compared = 0;
    for (k, text) in configs.iter().enumerate() {
        let path = dir.path().join(format!("c{k}.toml"));
        std::fs::write(&path, text).unwrap();
        let (a, b) = (dir.path().join(format!("a{k}")), dir.path().join(format!("b{k}")));
        if let Err(e) = run_lab(&path, &a).and_then(|_| run_lab(&path, &b)) {
            return verdict(false, e);
        }
        for file in ["trajectory.csv", "summary.json"] {
            let (x, y) = (std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap());
            if x != y || x.is_empty() {
                return verdict(false, format!("config {k}: {file} differs between runs"));
            }
            compared += 1;
        }
    }
    verdict(true, format!("{compared} artifact pairs byte-identical"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("mSGD convergence on sin2", msgd_convergence),
        ("alpha = 0 reproduces SGD", alpha_zero_reduction),
        ("heavy ball maps onto mSGD", shb_mapping),
        ("momentum speeds up the finite-sum rate", momentum_ordering),
        ("time-average trichotomy", trichotomy),
        ("AdaGrad convergence on sin2", adagrad_convergence),
        ("lemma suite", lemma_suite_checks),
        ("constant estimators", constant_estimators),
        ("closed form of p", p_closed_form),
        ("byte-identical artifacts", reproducibility),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {tag}: {name}: {}", k + 1, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
