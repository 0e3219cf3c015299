//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::sync::Arc;
use std::thread;
use std::time::Instant;

use lyapex::analysis::{
    compound, compound_volume_check, exterior_inequalities_check, mu1_closed_form, rate_fit,
    LinearOracleParams, RateModel,
};
use lyapex::benettin::{qr_pos, run, InitialBasis, RunConfig};
use lyapex::integrators::{estimate_order, OrderEstimate, SolverSpec};
use lyapex::linalg::{orthonormality_defect, singular_values, spectral_norm};
use lyapex::schedules::StepsizeSchedule;
use lyapex::systems::{
    finite_difference_jacobian, make_linear, make_linear_diagonal, make_lorenz96, Lorenz63,
    SystemRef,
};
use lyapex::weights::{identity_residual, WeightScheme};
use lyapex::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn linear() -> SystemRef {
    Arc::new(make_linear_diagonal(&[1.0, -2.0]).unwrap())
}

fn column(xs: &[f64]) -> InitialBasis {
    InitialBasis::Explicit(DMatrix::from_column_slice(xs.len(), 1, xs))
}

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

fn persistent_error_limit() -> Outcome {
    let cfg = RunConfig::new(
        linear(),
        SolverSpec::EULER,
        StepsizeSchedule::constant(0.05).unwrap(),
        1,
        1_000_000,
        DVector::zeros(2),
    )
    .with_basis(column(&[1.0, 0.0]))
    .with_record_every(1_000_000)
    .with_step_records(false);
    let mu = run(&cfg).unwrap().mu()[0];
    let limit = 1.05f64.ln() / 0.05;
    let gap = (mu - limit).abs();
    let offset = ((1.0 - mu) - 0.0241967).abs();
    Outcome {
        id: 1,
        name: "persistent-error limit",
        pass: gap < 1e-6 && offset < 1e-5,
        detail: format!("mu1={mu:.9} |mu1-limit|={gap:.2e} |err-0.0241967|={offset:.2e}"),
    }
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let alpha1 = sign * rng.random_range(0.5..2.0);
        let alpha2 = rng.random_range(-2.0..2.0);
        let schedule = if rng.random::<bool>() {
            StepsizeSchedule::constant(rng.random_range(0.001..0.2)).unwrap()
        } else {
            StepsizeSchedule::power(rng.random_range(0.01..0.3), rng.random_range(0.1..=1.0))
                .unwrap()
        };
        let steps = rng.random_range(1..=1000);
        let closed = mu1_closed_form(&LinearOracleParams {
            lambda1: 1.0,
            lambda2: -2.0,
            alpha1,
            alpha2,
            schedule: schedule.clone(),
            steps,
        })
        .unwrap();
        let cfg = RunConfig::new(
            linear(),
            SolverSpec::EULER,
            schedule,
            1,
            steps,
            DVector::zeros(2),
        )
        .with_basis(column(&[alpha1, alpha2]))
        .with_record_every(steps);
        let mu = run(&cfg).unwrap().mu()[0];
        worst = worst.max((mu - closed).abs() / closed.abs());
    }
    Outcome {
        id: 2,
        name: "oracle equivalence",
        pass: worst < 1e-10,
        detail: format!("max relative difference over 20 cases {worst:.2e}"),
    }
}

/// Criteria 3 and 4 share one run with both weight schemes.
fn varying_stepsize_runs() -> (Outcome, Outcome) {
    let n_max = 1_000_000;
    let cfg = RunConfig::new(
        linear(),
        SolverSpec::EULER,
        StepsizeSchedule::power(0.1, 0.5).unwrap(),
        1,
        n_max,
        DVector::zeros(2),
    )
    .with_basis(column(&[1.0, 0.0]))
    .with_weights(&[WeightScheme::Uniform])
    .with_record_every(1000)
    .with_step_records(false);
    let res = run(&cfg).unwrap();
    let err_at = |n: usize| {
        let r = res.records.iter().find(|r| r.n == n).unwrap();
        (r.mu[0] - 1.0).abs()
    };

    let checkpoints: Vec<f64> = [1_000, 10_000, 100_000, 1_000_000]
        .iter()
        .map(|&n| err_at(n))
        .collect();
    let decreasing = checkpoints.windows(2).all(|w| w[1] < w[0]);
    let constant_h_error = 1.0 - 1.005f64.ln() / 0.005;
    let beats_constant = checkpoints[3] < constant_h_error;
    let mut grid: Vec<usize> = (0..=12)
        .map(|i| ((10f64.powf(3.0 + i as f64 / 4.0) / 1000.0).round() as usize) * 1000)
        .collect();
    grid.dedup();
    let samples: Vec<(f64, f64)> = grid.iter().map(|&n| (n as f64, err_at(n))).collect();
    let fit_rate = rate_fit(&samples, RateModel::LogNOverSqrtN).unwrap();
    let fit_const = rate_fit(&samples, RateModel::Constant).unwrap();
    let c3 = Outcome {
        id: 3,
        name: "varying-stepsize convergence",
        pass: decreasing && beats_constant && fit_rate.residual < fit_const.residual,
        detail: format!(
            "errors at 1e3..1e6 {:.3e} {:.3e} {:.3e} {:.3e} (constant-h bar {constant_h_error:.3e}); \
             residual logN/sqrtN {:.3e} vs constant {:.3e}",
            checkpoints[0], checkpoints[1], checkpoints[2], checkpoints[3], fit_rate.residual, fit_const.residual
        ),
    };

    let mut violations = 0;
    let mut worst_ratio: f64 = 0.0;
    for r in &res.records {
        let err = (r.mu_weighted[0][0] - 1.0).abs();
        let bound = r.t / r.n as f64;
        worst_ratio = worst_ratio.max(err / bound);
        if err > bound {
            violations += 1;
        }
    }
    let c4 = Outcome {
        id: 4,
        name: "uniform-weight bound",
        pass: violations == 0 && !res.records.is_empty(),
        detail: format!(
            "{} records, {violations} violations, max err/(t/N) = {worst_ratio:.3}, final uniform error {:.3e}",
            res.records.len(),
            (res.records.last().unwrap().mu_weighted[0][0] - 1.0).abs()
        ),
    };
    (c3, c4)
}

fn lorenz63_invariants() -> Outcome {
    let cfg = RunConfig::new(
        Arc::new(Lorenz63::classical()),
        SolverSpec::RK4,
        StepsizeSchedule::power(0.1, 0.5).unwrap(),
        3,
        100_000,
        DVector::from_vec(vec![1.0, 1.0, 1.0]),
    )
    .with_transient(100_000, 0.001)
    .with_record_every(100_000)
    .with_step_records(false);
    let mu = run(&cfg).unwrap().mu();
    let sum: f64 = mu.iter().sum();
    let sum_err = (sum + 41.0 / 3.0).abs();
    Outcome {
        id: 5,
        name: "Lorenz-63 invariants",
        pass: sum_err < 0.01 && mu[1].abs() < 0.05,
        detail: format!(
            "mu=({:.4}, {:.4}, {:.4}) |sum+41/3|={sum_err:.3e} |mu2|={:.3e}",
            mu[0],
            mu[1],
            mu[2],
            mu[1].abs()
        ),
    }
}

fn lorenz96_shape() -> Outcome {
    let d = 40;
    let forcing = 10.0;
    let mut x0 = DVector::from_element(d, forcing);
    x0[0] += 0.01;
    let cfg = RunConfig::new(
        Arc::new(make_lorenz96(d, forcing).unwrap()),
        SolverSpec::RK4,
        StepsizeSchedule::power(0.1, 0.5).unwrap(),
        d,
        100_000,
        x0,
    )
    .with_transient(100_000, 0.01)
    .with_record_every(100_000)
    .with_step_records(false);
    let res = run(&cfg).unwrap();
    let mut spectrum = res.mu();
    let natural_inversion = spectrum
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0f64, f64::max);
    spectrum.sort_by(|a, b| b.total_cmp(a));
    let positive = spectrum.iter().filter(|&&l| l > 0.0).count();
    let near_zero = spectrum
        .iter()
        .map(|l| l.abs())
        .fold(f64::INFINITY, f64::min);
    let sorted = spectrum.windows(2).all(|w| w[1] <= w[0]);
    let sum: f64 = spectrum.iter().sum();
    let trace = res.mean_trace();
    let rel = ((sum - trace) / trace).abs();
    Outcome {
        id: 6,
        name: "Lorenz-96 spectrum shape",
        pass: positive >= 10 && near_zero < 0.1 && sorted && rel < 0.05,
        detail: format!(
            "lambda1={:.4} lambda40={:.4} positive={positive} min|lambda|={near_zero:.3e} \
             sum={sum:.4} mean trace={trace:.4} rel={rel:.2e} natural-order max rise={natural_inversion:.2e}",
            spectrum[0],
            spectrum[d - 1]
        ),
    }
}

// Criterion 7 sub-checks. Each returns a failure description or None.

fn check_gronwall() -> Option<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..1000 {
        let n = rng.random_range(1..=60);
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.2)).collect();
        // Any admissible a: a_m is at most the Lemma's right-hand side.
        let mut a = vec![0.0];
        for m in 1..=n {
            let rhs: f64 = (0..m).map(|j| (1.0 + a[j]) * b[j]).sum();
            a.push(rng.random_range(0.0..=1.0) * rhs);
        }
        // The extremal sequence attains equality at every step.
        let mut c = vec![0.0];
        for m in 1..=n {
            let rhs: f64 = (0..m).map(|j| (1.0 + c[j]) * b[j]).sum();
            c.push(rhs);
        }
        let bound = lyapex::analysis::gronwall_bound(&b, n).unwrap();
        let s: f64 = b.iter().sum();
        let closed = s * s.exp();
        let tol = 1e-12 * (1.0 + closed);
        if (bound - closed).abs() > tol || a[n] > c[n] + tol || c[n] > bound + tol {
            return Some(format!(
                "gronwall case {case}: a={} c={} bound={bound}",
                a[n], c[n]
            ));
        }
    }
    None
}

/// Leibniz expansion, independent of any LU factorization.
fn leibniz_det(m: &DMatrix<f64>) -> f64 {
    fn perms(n: usize) -> Vec<(Vec<usize>, f64)> {
        if n == 1 {
            return vec![(vec![0], 1.0)];
        }
        let mut out = Vec::new();
        for (p, sign) in perms(n - 1) {
            for pos in 0..n {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                let flips = (n - 1 - pos) as i32;
                out.push((q, sign * (-1f64).powi(flips)));
            }
        }
        out
    }
    let n = m.nrows();
    perms(n)
        .into_iter()
        .map(|(p, s)| s * (0..n).map(|i| m[(i, p[i])]).product::<f64>())
        .sum()
}

fn lex_subsets(d: usize, l: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0u32..(1 << d))
        .filter(|m| m.count_ones() as usize == l)
        .map(|m| (0..d).filter(|i| m & (1 << i) != 0).collect())
        .collect();
    out.sort();
    out
}

fn check_exterior() -> Option<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..300 {
        let d = rng.random_range(2..=6);
        let l = rng.random_range(1..=d);
        let a = gaussian(&mut rng, d, d);
        let b = gaussian(&mut rng, d, d);
        let ca = compound(&a, l).unwrap();
        let cb = compound(&b, l).unwrap();
        let scale = ca.entries.abs().max().max(1.0);

        // Entries against Leibniz minors in lexicographic order.
        let subs = lex_subsets(d, l);
        for (i, r) in subs.iter().enumerate() {
            for (j, c) in subs.iter().enumerate() {
                let sub = DMatrix::from_fn(l, l, |p, q| a[(r[p], c[q])]);
                if (ca.entries[(i, j)] - leibniz_det(&sub)).abs() > 1e-10 * scale {
                    return Some(format!("exterior case {case}: minor ({i},{j}) mismatch"));
                }
            }
        }
        // (i)
        let ci = compound(&DMatrix::identity(d, d), l).unwrap().entries;
        if (ci.clone() - DMatrix::identity(ci.nrows(), ci.ncols()))
            .abs()
            .max()
            > 1e-14
        {
            return Some(format!("exterior case {case}: item (i)"));
        }
        // (ii)
        let cab = compound(&(&a * &b), l).unwrap().entries;
        let prod = &ca.entries * &cb.entries;
        if (&cab - &prod).abs().max() > 1e-9 * prod.abs().max().max(1.0) {
            return Some(format!("exterior case {case}: item (ii)"));
        }
        // (iv)
        let sv = singular_values(&a);
        let top: f64 = sv[..l].iter().product();
        if (ca.norm() - top).abs() > 1e-8 * top.max(1.0) {
            return Some(format!("exterior case {case}: item (iv)"));
        }
        // (v), (vi), (viii)
        let k = rng.random_range(0..=l);
        let ineq = exterior_inequalities_check(&a, &b, l, k).unwrap();
        if !ineq.all_hold(1e-10) {
            return Some(format!("exterior case {case}: inequalities {ineq:?}"));
        }
        let direct_v = spectral_norm(&a).powi(l as i32) - top;
        if direct_v < -1e-9 * top.max(1.0) {
            return Some(format!("exterior case {case}: item (v) direct"));
        }
        // (ix): volume of the image of a random L-frame equals the QR diagonal product.
        let v0 = gaussian(&mut rng, d, l);
        let (_, r) = qr_pos(&(&a * &v0)).unwrap();
        let rdiag: f64 = (0..l).map(|i| r[(i, i)]).product();
        let coords = DVector::from_iterator(
            subs.len(),
            subs.iter()
                .map(|rows| leibniz_det(&DMatrix::from_fn(l, l, |p, q| v0[(rows[p], q)]))),
        );
        let vol = (&ca.entries * coords).norm();
        if (vol - rdiag).abs() > 1e-9 * rdiag.max(1.0) {
            return Some(format!("exterior case {case}: item (ix) {vol} vs {rdiag}"));
        }
    }
    None
}

fn check_volume() -> Option<String> {
    let mut worst: f64 = 0.0;
    let mut names = Vec::new();

    let exact = RunConfig::new(
        linear(),
        SolverSpec::EXACT,
        StepsizeSchedule::power(0.1, 0.5).unwrap(),
        2,
        300,
        DVector::zeros(2),
    )
    .with_basis(InitialBasis::Explicit(DMatrix::identity(2, 2)));
    names.push(("exact diagonal", exact, 2));

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = gaussian(&mut rng, 3, 3);
    let random_linear = RunConfig::new(
        Arc::new(make_linear(a).unwrap()),
        SolverSpec::EULER,
        StepsizeSchedule::power(0.05, 0.5).unwrap(),
        3,
        100,
        DVector::from_vec(vec![0.3, -0.2, 0.1]),
    )
    .with_basis(InitialBasis::Random { seed: 9 });
    names.push(("euler random 3x3", random_linear, 2));

    let lorenz = RunConfig::new(
        Arc::new(Lorenz63::classical()),
        SolverSpec::RK4,
        StepsizeSchedule::constant(0.001).unwrap(),
        3,
        500,
        DVector::from_vec(vec![1.0, 1.0, 1.0]),
    )
    .with_transient(100_000, 0.001);
    names.push(("lorenz63 rk4", lorenz, 3));

    for (name, cfg, l) in names {
        let res = run(&cfg).unwrap();
        let r = compound_volume_check(&cfg, &res, l).unwrap();
        worst = worst.max(r);
        if r.is_nan() || r >= 1e-8 {
            return Some(format!("volume check {name}: residual {r:.3e}"));
        }
    }
    let _ = worst;
    None
}

fn check_weight_identity() -> Option<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for case in 0..1000 {
        let n = rng.random_range(1..=200);
        let hs: Vec<f64> = (0..n).map(|_| rng.random_range(1e-3..=1.0)).collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
        // The identity is exact for weights summing to one; renormalisation
        // leaves a rounding defect that is part of the left-hand side.
        let defect = (w.iter().sum::<f64>() - 1.0).abs();
        let r = identity_residual(&w, &hs).unwrap();
        if r > 1e-12 + defect {
            return Some(format!("weight identity case {case}: residual {r:.3e}"));
        }
    }
    None
}

fn check_qr() -> Option<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for case in 0..500 {
        let d = rng.random_range(1..=8);
        let k = rng.random_range(1..=d);
        let w = gaussian(&mut rng, d, k);
        let (q, r) = qr_pos(&w).unwrap();
        let recon = (&q * &r - &w).abs().max();
        let lower = (0..k)
            .flat_map(|j| (j + 1..k).map(move |i| (i, j)))
            .map(|ij| r[ij].abs())
            .fold(0.0, f64::max);
        let diag_ok = (0..k).all(|i| r[(i, i)] > 0.0);
        if recon > 1e-12 * w.abs().max().max(1.0)
            || orthonormality_defect(&q) > 1e-13
            || lower != 0.0
            || !diag_ok
        {
            return Some(format!(
                "qr case {case}: recon {recon:.2e} diag_ok {diag_ok}"
            ));
        }
    }
    None
}

fn check_qr_interval() -> Option<String> {
    let base = RunConfig::new(
        Arc::new(Lorenz63::classical()),
        SolverSpec::RK4,
        StepsizeSchedule::constant(0.01).unwrap(),
        3,
        1000,
        DVector::from_vec(vec![1.0, 1.0, 1.0]),
    )
    .with_transient(1000, 0.01)
    .with_record_every(10);
    let reference = run(&base).unwrap().mu();
    for interval in [2, 5] {
        let mu = run(&base.clone().with_qr_interval(interval)).unwrap().mu();
        let diff = mu
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if diff > 1e-10 {
            return Some(format!(
                "qr_interval {interval}: final exponents differ by {diff:.2e}"
            ));
        }
    }
    None
}

fn check_jacobians() -> Option<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let systems: Vec<SystemRef> = vec![
        Arc::new(Lorenz63::classical()),
        Arc::new(make_lorenz96(40, 10.0).unwrap()),
    ];
    for sys in systems {
        for _ in 0..100 {
            let x = DVector::from_fn(sys.dim(), |_, _| rng.random_range(-20.0..20.0));
            let fd = finite_difference_jacobian(sys.as_ref(), &x, 1e-6).unwrap();
            let j = sys.jacobian(&x);
            let err = (&fd - &j).abs().max() / j.abs().max();
            if err > 1e-6 {
                return Some(format!(
                    "{} jacobian: relative fd error {err:.2e}",
                    sys.name()
                ));
            }
        }
    }
    None
}

fn check_conditions_brute_force() -> Option<String> {
    let partial = |q: f64, n: usize| -> f64 { (1..=n).map(|i| (i as f64).powf(-q)).sum() };
    for &s in &[0.3, 0.5, 0.75, 1.0] {
        for &p in &[1.0, 2.0, 4.0] {
            let q = s * (p + 1.0);
            if q > 1.0 && q < 1.2 {
                continue;
            }
            let report = StepsizeSchedule::power(0.1, s)
                .unwrap()
                .check_conditions(p)
                .unwrap();
            let half = partial(q, 500_000);
            let full = partial(q, 1_000_000);
            let settles = (full - half) / full < 0.02;
            if settles != report.p_series_converges {
                return Some(format!(
                    "conditions s={s} p={p}: brute force settles={settles}"
                ));
            }
            let grows = 1.0 - partial(s, 500_000) / partial(s, 1_000_000) >= 0.02;
            if grows != report.sum_diverges {
                return Some(format!("conditions s={s}: divergence verdict"));
            }
        }
    }
    None
}

fn check_determinism() -> Option<String> {
    let cfg = RunConfig::new(
        Arc::new(Lorenz63::classical()),
        SolverSpec::RK4,
        StepsizeSchedule::power(0.1, 0.5).unwrap(),
        3,
        2000,
        DVector::from_vec(vec![1.0, 1.0, 1.0]),
    )
    .with_transient(1000, 0.001)
    .with_weights(&[WeightScheme::Uniform])
    .with_basis(InitialBasis::Random { seed: 3 });
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    let bits = |r: &lyapex::benettin::RunResult| {
        r.log_diag_r.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
    };
    if bits(&a) != bits(&b) || a.records != b.records {
        return Some("repeat runs differ".into());
    }
    None
}

fn property_suites() -> Outcome {
    let checks: Vec<(&str, fn() -> Option<String>)> = vec![
        ("gronwall", check_gronwall),
        ("exterior", check_exterior),
        ("volume", check_volume),
        ("weight-identity", check_weight_identity),
        ("qr", check_qr),
        ("qr-interval", check_qr_interval),
        ("jacobian", check_jacobians),
        ("conditions", check_conditions_brute_force),
        ("determinism", check_determinism),
    ];
    let failures: Vec<String> = thread::scope(|s| {
        let handles: Vec<_> = checks.iter().map(|(_, f)| s.spawn(*f)).collect();
        handles
            .into_iter()
            .filter_map(|h| h.join().unwrap())
            .collect()
    });
    Outcome {
        id: 7,
        name: "property suites",
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            format!(
                "{} suites: {}",
                checks.len(),
                checks.iter().map(|c| c.0).collect::<Vec<_>>().join(", ")
            )
        } else {
            failures.join("; ")
        },
    }
}

fn consistency_orders() -> Outcome {
    let sys = make_linear_diagonal(&[1.0, -2.0]).unwrap();
    let x = DVector::zeros(2);
    let hs = [0.1, 0.05, 0.025, 0.0125, 0.00625];
    let order = |solver| match estimate_order(&sys, solver, &x, &hs).unwrap() {
        OrderEstimate::Finite(p) => p,
        OrderEstimate::Exact => f64::INFINITY,
    };
    let euler = order(SolverSpec::EULER);
    let rk4 = order(SolverSpec::RK4);
    Outcome {
        id: 8,
        name: "consistency orders",
        pass: (euler - 1.0).abs() <= 0.2 && (rk4 - 4.0).abs() <= 0.2,
        detail: format!("euler {euler:.3}, rk4 {rk4:.3}"),
    }
}

fn main() {
    let start = Instant::now();
    let mut outcomes: Vec<Outcome> = thread::scope(|s| {
        let single: Vec<_> = vec![
            s.spawn(persistent_error_limit),
            s.spawn(oracle_equivalence),
            s.spawn(lorenz63_invariants),
            s.spawn(lorenz96_shape),
            s.spawn(property_suites),
            s.spawn(consistency_orders),
        ];
        let pair = s.spawn(varying_stepsize_runs);
        let mut out: Vec<Outcome> = single.into_iter().map(|h| h.join().unwrap()).collect();
        let (c3, c4) = pair.join().unwrap();
        out.push(c3);
        out.push(c4);
        out
    });
    outcomes.sort_by_key(|o| o.id);
    for o in &outcomes {
        println!(
            "criterion {} {}: {} ({})",
            o.id,
            o.name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!(
        "acceptance: {} of {} criteria pass in {:.1}s",
        outcomes.len() - failed,
        outcomes.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
