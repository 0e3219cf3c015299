use std::sync::Arc;

use lyapex::analysis::{
    compound_volume_check, euler_relative_global_error, fast_invertibility_diagnostic,
    relative_error_bound, tangent_step_maps, theoretical_limit,
};
use lyapex::benettin::{run, InitialBasis, RunConfig};
use lyapex::integrators::SolverSpec;
use lyapex::linalg::orthonormality_defect;
use lyapex::schedules::StepsizeSchedule;
use lyapex::systems::{make_linear_diagonal, Lorenz63, SystemRef};
use lyapex::weights::WeightScheme;
use lyapex::{DMatrix, DVector};

fn linear() -> SystemRef {
    Arc::new(make_linear_diagonal(&[1.0, -2.0]).unwrap())
}

fn first_axis() -> InitialBasis {
    InitialBasis::Explicit(DMatrix::from_column_slice(2, 1, &[1.0, 0.0]))
}

fn lorenz(sched: StepsizeSchedule, steps: usize) -> RunConfig {
    RunConfig::new(
        Arc::new(Lorenz63::classical()),
        SolverSpec::RK4,
        sched,
        3,
        steps,
        DVector::from_vec(vec![1.0, 1.0, 1.0]),
    )
    .with_transient(100_000, 0.001)
}

#[test]
fn constant_step_run_reaches_persistent_limit() {
    let cfg = RunConfig::new(
        linear(),
        SolverSpec::EULER,
        StepsizeSchedule::constant(0.05).unwrap(),
        1,
        1_000_000,
        DVector::zeros(2),
    )
    .with_basis(first_axis())
    .with_record_every(1_000_000)
    .with_step_records(false);
    let mu = run(&cfg).unwrap().mu()[0];
    assert!((mu - theoretical_limit(0.05, 1.0).unwrap()).abs() < 1e-5);
}

#[test]
fn uniform_replay_matches_direct_sum() {
    let sched = StepsizeSchedule::power(0.1, 0.5).unwrap();
    let n = 5000;
    let cfg = RunConfig::new(
        linear(),
        SolverSpec::EULER,
        sched.clone(),
        1,
        n,
        DVector::zeros(2),
    )
    .with_basis(first_axis())
    .with_weights(&[WeightScheme::Adaptive, WeightScheme::Uniform])
    .with_record_every(50);
    let res = run(&cfg).unwrap();
    let hs = sched.sequence(n).unwrap();
    let direct: f64 = hs.iter().map(|h| h.ln_1p() / h).sum::<f64>() / n as f64;
    let replay = res.replay(WeightScheme::Uniform).unwrap();
    assert!((replay[n - 1][0] - direct).abs() < 1e-10);
    let stored = res.mu_weighted(WeightScheme::Uniform).unwrap();
    assert!((stored[0] - direct).abs() < 1e-10);

    // Adaptive weights give back the plain estimate at every recorded step.
    let adaptive = res.replay(WeightScheme::Adaptive).unwrap();
    for r in &res.records {
        assert!((r.mu_weighted[0][0] - r.mu[0]).abs() < 1e-12);
        assert!((adaptive[r.n - 1][0] - r.mu[0]).abs() < 1e-12);
    }
}

#[test]
fn uniform_replay_on_constant_steps_equals_mu() {
    let cfg = RunConfig::new(
        linear(),
        SolverSpec::EULER,
        StepsizeSchedule::constant(0.02).unwrap(),
        2,
        2000,
        DVector::zeros(2),
    )
    .with_basis(InitialBasis::Random { seed: 4 });
    let res = run(&cfg).unwrap();
    let replay = res.replay(WeightScheme::Uniform).unwrap();
    for (i, r) in res.records.iter().enumerate() {
        for c in 0..2 {
            assert!((replay[i][c] - r.mu[c]).abs() < 1e-12);
        }
    }
}

#[test]
fn run_tables_are_consistent() {
    let sched = StepsizeSchedule::power(0.1, 0.5).unwrap();
    let res = run(&lorenz(sched.clone(), 3000).with_record_every(1)).unwrap();
    assert!(orthonormality_defect(&res.final_v) < 1e-10);
    assert!(res.t_sequence.windows(2).all(|w| w[1] > w[0]));
    for (i, t) in res.t_sequence.iter().enumerate() {
        assert!((t - sched.cumulative(0, i + 1).unwrap()).abs() < 1e-12);
    }
    let mut sums = [0.0; 3];
    for r in &res.records {
        for (c, s) in sums.iter_mut().enumerate() {
            *s += res.log_diag_row(r.n)[c];
        }
        for c in 0..3 {
            assert!((r.mu[c] - sums[c] / r.t).abs() < 1e-12);
        }
    }
}

#[test]
fn lorenz63_running_sum_is_nearly_constant() {
    let cfg = lorenz(StepsizeSchedule::constant(0.001).unwrap(), 20_000).with_record_every(100);
    let res = run(&cfg).unwrap();
    let sums: Vec<f64> = res.records.iter().map(|r| r.mu.iter().sum()).collect();
    let exact = -41.0 / 3.0;
    let worst = sums
        .iter()
        .map(|s| ((s - exact) / exact).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn qr_interval_preserves_log_totals() {
    for solver in [SolverSpec::EULER, SolverSpec::EXACT] {
        let base = RunConfig::new(
            linear(),
            solver,
            StepsizeSchedule::power(0.1, 0.5).unwrap(),
            2,
            1000,
            DVector::zeros(2),
        )
        .with_basis(InitialBasis::Random { seed: 1 })
        .with_record_every(10);
        let reference = run(&base).unwrap().log_sums;
        for interval in [2, 5] {
            let sums = run(&base.clone().with_qr_interval(interval))
                .unwrap()
                .log_sums;
            for c in 0..2 {
                assert!((sums[c] - reference[c]).abs() <= 1e-8 * reference[c].abs());
            }
        }
    }
}

#[test]
fn volume_check_on_small_runs() {
    let exact = RunConfig::new(
        linear(),
        SolverSpec::EXACT,
        StepsizeSchedule::constant(0.1).unwrap(),
        2,
        400,
        DVector::zeros(2),
    )
    .with_basis(InitialBasis::Explicit(DMatrix::identity(2, 2)));
    let res = run(&exact).unwrap();
    assert!(compound_volume_check(&exact, &res, 2).unwrap() < 1e-10);

    let cfg = lorenz(StepsizeSchedule::power(0.01, 0.5).unwrap(), 500);
    let res = run(&cfg).unwrap();
    for l in 1..=3 {
        assert!(compound_volume_check(&cfg, &res, l).unwrap() < 1e-6);
    }
    let long = lorenz(StepsizeSchedule::constant(0.001).unwrap(), 1001);
    let res = run(&long).unwrap();
    assert!(compound_volume_check(&long, &res, 2).is_err());
}

#[test]
fn relative_error_bound_dominates_measured_error() {
    let lambdas = [1.0, -2.0];
    let sched = StepsizeSchedule::power(0.1, 0.5).unwrap();
    // |e^{hλ} − 1 − hλ| ≤ (λ²/2) e^{h|λ|} h², so this c covers every h ≤ 0.1.
    let c = lambdas
        .iter()
        .map(|l: &f64| l * l / 2.0 * (0.1 * l.abs()).exp())
        .fold(0.0, f64::max);
    for n in [10, 100, 1000] {
        let hs = sched.sequence(n).unwrap();
        let measured = euler_relative_global_error(&lambdas, &hs);
        let bound = relative_error_bound(c, &sched, 1.0, n).unwrap();
        assert!(measured <= bound, "N={n}: {measured} > {bound}");
    }
}

#[test]
fn relative_error_bound_settles_for_rk4_order() {
    let sched = StepsizeSchedule::power(0.1, 0.5).unwrap();
    let a = relative_error_bound(1.0, &sched, 4.0, 100_000).unwrap();
    let b = relative_error_bound(1.0, &sched, 4.0, 200_000).unwrap();
    assert!((b - a).abs() < 1e-6);
}

#[test]
fn fast_invertibility_diagnostic_examples() {
    let cfg = RunConfig::new(
        linear(),
        SolverSpec::EXACT,
        StepsizeSchedule::power(0.1, 0.5).unwrap(),
        2,
        300,
        DVector::zeros(2),
    );
    let maps = tangent_step_maps(&cfg).unwrap();
    for l in 1..=2 {
        let ratio = fast_invertibility_diagnostic(&maps, l, 200, 3).unwrap();
        assert!((ratio - 1.0).abs() < 1e-10, "L={l}: {ratio}");
    }

    let cfg = lorenz(StepsizeSchedule::constant(0.01).unwrap(), 200);
    let maps = tangent_step_maps(&cfg).unwrap();
    let ratio = fast_invertibility_diagnostic(&maps, 1, 500, 3).unwrap();
    assert!(ratio > 0.0 && ratio <= 1.0 + 1e-12, "{ratio}");
}
