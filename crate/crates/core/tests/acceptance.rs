//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so every criterion reports even when an
//! earlier one fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vesselsim::bell::{run_experiment_with, VesselExperiment, QUANTUM_BOUND};
use vesselsim::locality::{context_witnesses, locality_check, ASSIGNMENT_COUNT};
use vesselsim::quantum::{born_histogram, random_settings_max, STATE_COUNT};
use vesselsim::report::write_csv;
use vesselsim::scenario::parse_scenario_str;
use vesselsim::stats::chi_square_gof;
use vesselsim::*;

/// Outcome of one criterion: failures carry the first violated detail.
type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn eq1_reproduction() -> Check {
    let experiment = VesselExperiment {
        distribution: LambdaDistribution::default(),
        system: VesselSystem::default(),
        tie_policy: TiePolicy::Error,
    };
    let mut slowest = Duration::ZERO;
    for seed in [0, 1, 42, 2024, u64::MAX] {
        for n in [1, 1_000, 100_000] {
            let (stat, took) = timed(|| run_experiment_with(&experiment, seed, n, 0));
            let stat = stat.map_err(|e| format!("seed {seed}, n {n}: {e}"))?;
            ensure!(stat.value == 4.0, "seed {seed}, n {n}: value {}", stat.value);
            if n == 100_000 {
                slowest = slowest.max(took);
                ensure!(took < Duration::from_secs(1), "seed {seed}: n = 1e5 took {took:?}");
            }
        }
    }
    Ok(format!("value 4.0 exactly on 15 runs, slowest n=1e5 run {slowest:.2?}"))
}

fn non_factorizability() -> Check {
    let samples = HiddenVariableSampler::uniform(17).samples(1_000);
    let model = VesselModel::default();
    let check = locality_check(&model, &samples).map_err(|e| e.to_string())?;
    let mut left_narrower = 0;
    for (lambda, report) in samples.iter().zip(&check.reports) {
        ensure!(!report.satisfiable, "{lambda:?} factorizes");
        ensure!(
            report.exhausted() && report.assignments_checked == ASSIGNMENT_COUNT,
            "{lambda:?}: search stopped after {}",
            report.assignments_checked
        );
        if lambda.lambda_a() < lambda.lambda_b() {
            left_narrower += 1;
            let witness = contextuality_witness(*lambda).map_err(|e| e.to_string())?;
            ensure!(witness.differs, "{lambda:?}: A agrees across B and B'");
            let listed = context_witnesses(&model, *lambda).map_err(|e| e.to_string())?;
            ensure!(
                listed.iter().any(|w| w.experiment == ExperimentKind::A
                    && w.first_value != w.second_value
                    && [w.first_context, w.second_context].contains(&ExperimentKind::B)
                    && [w.first_context, w.second_context].contains(&ExperimentKind::BPrime)),
                "{lambda:?}: no A witness between B and B'"
            );
        }
    }
    ensure!(left_narrower > 0, "no sample with lambda_a < lambda_b");
    Ok(format!("1000/1000 unsatisfiable after 16 assignments, {left_narrower} A-witnesses"))
}

fn correlation_classification() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for size in [1, 2, 10, 1_000] {
        let samples: Vec<_> = (0..size)
            .map(|_| loop {
                let l = SiphonDiameters::new(rng.random_range(0.1..5.0), rng.random_range(0.1..5.0)).unwrap();
                if !l.is_tie() {
                    break l;
                }
            })
            .collect();
        let kind = classify_correlations(&VesselModel::default(), &samples).map_err(|e| e.to_string())?;
        ensure!(kind == CorrelationKind::SecondKind, "size {size}: {kind:?}");
    }
    ensure!(
        classify_correlations(&VesselModel::default(), &[]).is_err(),
        "empty sample was classified"
    );
    Ok("SecondKind on samples of size 1, 2, 10, 1000".into())
}

fn flow_oracle() -> Check {
    let system = VesselSystem::default();
    let mut worst = 0.0f64;
    let mut signs = 0;
    for i in 0..10 {
        for j in 0..10 {
            let (a, b) = (0.5 + 2.5 * i as f64 / 9.0, 0.5 + 2.5 * j as f64 / 9.0);
            let lambda = SiphonDiameters::new(a, b).unwrap();
            let split = simulate_flow(lambda, system, 1e-4).map_err(|e| e.to_string())?;
            let oracle = 20.0 * a * a / (a * a + b * b);
            let err = (split.x_left - oracle).abs();
            worst = worst.max(err);
            ensure!(err <= 0.05, "({a}, {b}): x_left {} vs {oracle}", split.x_left);
            if i != j {
                let (left, _) = joint_outcome_ab(lambda, TiePolicy::Error).map_err(|e| e.to_string())?;
                ensure!(
                    Outcome::from_sign(split.x_left > 10.0) == left,
                    "({a}, {b}): flow sign disagrees with outcome rule"
                );
                signs += 1;
            }
        }
    }
    Ok(format!("max |x_left - closed form| = {worst:.2e} L, {signs} off-diagonal signs agree"))
}

fn random_state(rng: &mut ChaCha8Rng, sparse: bool) -> VesselSuperpositionState {
    let keep: u16 = if sparse { rng.random_range(1..(1 << STATE_COUNT)) } else { u16::MAX };
    let amps: Vec<Complex64> = (0..STATE_COUNT)
        .map(|x| {
            if keep & (1 << x) != 0 {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    make_state(&amps, true).unwrap()
}

fn state_machinery() -> Check {
    let scaled = |s: f64| -> Vec<Complex64> { vec![Complex64::new(s / (STATE_COUNT as f64).sqrt(), 0.0); STATE_COUNT] };
    ensure!(make_state(&scaled(1.0), false).is_ok(), "uniform state rejected");
    ensure!(make_state(&scaled(1.0 + 1e-8), false).is_err(), "norm deviation 2e-8 accepted");
    ensure!(make_state(&scaled((1.0 + 1e-10f64).sqrt()), false).is_ok(), "deviation 1e-10 rejected");
    ensure!(make_state(&[Complex64::new(1.0, 0.0); STATE_COUNT], false).is_err(), "all-ones accepted");

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let states = [VesselSuperpositionState::uniform(), random_state(&mut rng, false), random_state(&mut rng, false)];
    let mut min_p = 1.0f64;
    for (k, state) in states.iter().enumerate() {
        let counts = born_histogram(state, 1_000 + k as u64, 100_000);
        let test = chi_square_gof(&counts, &state.probabilities());
        min_p = min_p.min(test.p_value);
        ensure!(test.p_value > 0.001, "state {k}: chi-square p = {}", test.p_value);
    }

    for _ in 0..100 {
        let state = random_state(&mut rng, true);
        let nonzero = state.amplitudes().iter().filter(|a| a.norm() > 1e-9).count();
        let rank = schmidt_rank(&state, 1e-9).map_err(|e| e.to_string())?;
        let m = state.coefficient_matrix();
        let svd = DMatrix::from_fn(STATE_COUNT, STATE_COUNT, |i, j| m[i][j]).singular_values();
        let independent = svd.iter().filter(|&&s| s > 1e-9).count();
        ensure!(rank == nonzero && rank == independent, "rank {rank}, nonzero {nonzero}, svd {independent}");
    }
    Ok(format!("normalization gate at 1e-9, min chi-square p = {min_p:.3}, 100 ranks match SVD"))
}

fn quantum_reference() -> Check {
    let start = Instant::now();
    let analytic = SingletSettings::planar([0.0, 90.0, 45.0, 135.0]).analytic_statistic();
    let stated = (analytic - QUANTUM_BOUND).abs() <= 1e-12;

    let settings = SingletSettings::planar([0.0, 270.0, 45.0, 135.0]);
    let mc = run_experiment_with(&settings, 8, 1_000_000, 0).map_err(|e| e.to_string())?;
    for est in &mc.components {
        let expected = settings.expectation(est.pair);
        ensure!(
            (est.mean - expected).abs() <= 3.0 * est.stderr,
            "{}: {} vs {expected} (stderr {})",
            est.pair,
            est.mean,
            est.stderr
        );
    }
    let best = random_settings_max(5, 100_000);
    ensure!(best <= QUANTUM_BOUND + 1e-9, "random search reached {best}");
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(5), "took {took:?}");
    ensure!(
        stated,
        "analytic statistic at (0, 90, 45, 135) is {analytic:.12}, not 2*sqrt(2); \
         (0, 270, 45, 135) gives {:.12}; MC within 3 stderr, search max {best:.9}, {took:.2?}",
        settings.analytic_statistic()
    );
    Ok(format!("analytic {analytic:.12}, MC within 3 stderr, search max {best:.9}, {took:.2?}"))
}

fn determinism() -> Check {
    let bodies = [
        r#"{"seed": 1, "runs_per_pair": 30000, "locality_samples": 1000}"#,
        r#"{"seed": 77, "runs_per_pair": 20000, "singlet_mode": "monte_carlo", "tie_policy": {"split_coin": 9},
            "singlet_angles": [10, 80, 33, 150], "amplitudes": [[0.6,0],[0,0],[0,0.48],[0,0],[0,0],[0,0],
            [0,0],[0,0],[0,0],[0,0],[0.384,-0.512]], "flow": {"lambda_a": 1.3, "lambda_b": 2.1, "dt": 1e-4}}"#,
    ];
    let mut compared = 0;
    for body in bodies {
        let scenario = parse_scenario_str(body).map_err(|e| e.to_string())?;
        for command in Command::ALL {
            let reference = run_command(command, &scenario, 1).map_err(|e| e.to_string())?.to_json();
            for workers in [1, 2, 4, 8, 0] {
                let again = run_command(command, &scenario, workers).map_err(|e| e.to_string())?.to_json();
                ensure!(again == reference, "{} differs with {workers} workers", command.name());
                compared += 1;
            }
            let (mut a, mut b) = (Vec::new(), Vec::new());
            write_csv(command, &scenario, &mut a).map_err(|e| e.to_string())?;
            write_csv(command, &scenario, &mut b).map_err(|e| e.to_string())?;
            ensure!(a == b, "{} csv differs between runs", command.name());
        }
    }
    Ok(format!("{compared} reports byte-identical across 1, 2, 4, 8 and default workers"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("eq1-reproduction", eq1_reproduction),
        ("non-factorizability", non_factorizability),
        ("correlation-classification", correlation_classification),
        ("flow-model-oracle", flow_oracle),
        ("state-machinery", state_machinery),
        ("quantum-reference", quantum_reference),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
