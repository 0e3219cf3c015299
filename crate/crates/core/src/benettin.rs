//! Benettin's algorithm with prescribed, possibly varying stepsizes.
//!
//! For `n = 1..N` the perturbation basis is evolved with the solver's tangent
//! map, re-orthonormalized by a QR decomposition with positive diagonal, and
//! the logarithms of the diagonal of `R` are accumulated. The running
//! estimates are
//!
//! ```text
//! μ_i(n)   = (1 / h_0^n) Σ_{m ≤ n} log (R_m)_ii
//! μ_i^w(n) = Σ_{m ≤ n} w_{m,n} log (R_m)_ii / h_m
//! ```

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::error::{invalid, Error, Result};
use crate::integrators::{step, step_nonlinear, CoupledState, SolverSpec};
use crate::schedules::StepsizeSchedule;
use crate::systems::{validate_state, SystemRef};
use crate::weights::WeightScheme;

/// Diagonal entries of `R` below this magnitude mean the basis collapsed.
pub const DEGENERATE_DIAGONAL: f64 = 1e-300;

/// Thin QR decomposition `W = Q R` with `R_ii > 0`.
pub fn qr_pos(w: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (d, k) = w.shape();
    if k == 0 || k > d {
        return Err(invalid(format!(
            "qr_pos needs 1 <= k <= d, got a {d}x{k} matrix"
        )));
    }
    let qr = w.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for i in 0..k {
        let rii = r[(i, i)];
        if !(rii.abs() >= DEGENERATE_DIAGONAL) {
            return Err(Error::DegenerateBasis {
                step: 0,
                index: i,
                value: rii.abs(),
            });
        }
        if rii < 0.0 {
            q.column_mut(i).neg_mut();
            r.row_mut(i).neg_mut();
        }
    }
    Ok((q, r))
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialBasis {
    /// Columns used as given, including their lengths.
    Explicit(DMatrix<f64>),
    /// Entries uniform in `[0, 1)` from a seeded generator, then orthonormalized.
    Random { seed: u64 },
}

/// Nonlinear-only integration applied before exponent accumulation starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transient {
    pub steps: usize,
    pub h: f64,
}

impl Transient {
    pub const NONE: Transient = Transient { steps: 0, h: 0.0 };
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub system: SystemRef,
    pub solver: SolverSpec,
    pub schedule: StepsizeSchedule,
    /// Number of exponents, `1 ≤ k ≤ d`.
    pub k: usize,
    /// Number of steps `N`.
    pub steps: usize,
    pub transient: Transient,
    pub x0: DVector<f64>,
    pub v0: InitialBasis,
    /// Steps between re-orthonormalizations.
    pub qr_interval: usize,
    pub weight_schemes: Vec<WeightScheme>,
    /// Running averages are recorded every `record_every` steps and at `N`.
    pub record_every: usize,
    /// Keep the per-step `log(R_n)_ii`, `h_n` and `h_0^n` tables.
    pub keep_step_records: bool,
}

impl RunConfig {
    pub fn new(
        system: SystemRef,
        solver: SolverSpec,
        schedule: StepsizeSchedule,
        k: usize,
        steps: usize,
        x0: DVector<f64>,
    ) -> Self {
        RunConfig {
            system,
            solver,
            schedule,
            k,
            steps,
            transient: Transient::NONE,
            x0,
            v0: InitialBasis::Random { seed: 0 },
            qr_interval: 1,
            weight_schemes: Vec::new(),
            record_every: 1,
            keep_step_records: true,
        }
    }

    pub fn with_transient(mut self, steps: usize, h: f64) -> Self {
        self.transient = Transient { steps, h };
        self
    }

    pub fn with_basis(mut self, v0: InitialBasis) -> Self {
        self.v0 = v0;
        self
    }

    pub fn with_weights(mut self, schemes: &[WeightScheme]) -> Self {
        self.weight_schemes = schemes.to_vec();
        self
    }

    pub fn with_qr_interval(mut self, interval: usize) -> Self {
        self.qr_interval = interval;
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn with_step_records(mut self, keep: bool) -> Self {
        self.keep_step_records = keep;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.system.dim();
        if self.k == 0 || self.k > d {
            return Err(invalid(format!(
                "number of exponents k={} must satisfy 1 <= k <= d={d}",
                self.k
            )));
        }
        if self.steps == 0 {
            return Err(invalid("number of steps N must be at least 1"));
        }
        validate_state(self.system.as_ref(), &self.x0)?;
        self.solver.check_supported(self.system.as_ref())?;
        if let Some(max) = self.schedule.max_steps() {
            if max < self.steps {
                return Err(invalid(format!(
                    "schedule defines {max} steps but N={} were requested",
                    self.steps
                )));
            }
        }
        if self.transient.steps > 0 && !(self.transient.h > 0.0 && self.transient.h <= 1.0) {
            return Err(invalid(format!(
                "transient stepsize must lie in (0, 1], got {}",
                self.transient.h
            )));
        }
        if self.qr_interval == 0 {
            return Err(invalid("qr_interval must be at least 1"));
        }
        if self.record_every == 0 || !self.record_every.is_multiple_of(self.qr_interval) {
            return Err(invalid(format!(
                "record_every={} must be a positive multiple of qr_interval={}",
                self.record_every, self.qr_interval
            )));
        }
        if let InitialBasis::Explicit(v) = &self.v0 {
            if v.shape() != (d, self.k) {
                return Err(invalid(format!(
                    "initial basis is {}x{} but must be {d}x{}",
                    v.nrows(),
                    v.ncols(),
                    self.k
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(invalid("initial basis has non-finite entries"));
            }
            let sv = crate::linalg::singular_values(v);
            let smallest = sv.last().copied().unwrap_or(0.0);
            if !(smallest > sv[0] * 1e-12) {
                return Err(invalid(
                    "initial basis columns are not linearly independent",
                ));
            }
        }
        Ok(())
    }

    /// The initial basis `V_0` the run starts from.
    pub fn initial_basis(&self) -> Result<DMatrix<f64>> {
        match &self.v0 {
            InitialBasis::Explicit(v) => Ok(v.clone()),
            InitialBasis::Random { seed } => random_basis(self.system.dim(), self.k, *seed),
        }
    }

    /// State after the transient.
    pub fn start_state(&self) -> Result<DVector<f64>> {
        let mut x = self.x0.clone();
        for i in 0..self.transient.steps {
            x = step_nonlinear(self.system.as_ref(), self.solver, &x, self.transient.h).map_err(
                |e| match e {
                    Error::Overflow { h, .. } => Error::Overflow { step: i + 1, h },
                    other => other,
                },
            )?;
        }
        Ok(x)
    }
}

/// Orthonormalized `d × k` matrix with seeded uniform `[0, 1)` entries.
pub fn random_basis(d: usize, k: usize, seed: u64) -> Result<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = DMatrix::from_fn(d, k, |_, _| rng.random::<f64>());
    Ok(qr_pos(&raw)?.0)
}

/// Running estimates at a recorded step.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub n: usize,
    pub h: f64,
    pub t: f64,
    pub mu: Vec<f64>,
    /// One vector per configured weight scheme, in configuration order.
    pub mu_weighted: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub k: usize,
    pub steps_completed: usize,
    pub weight_schemes: Vec<WeightScheme>,
    /// Row-major `steps × k` table of `log(R_n)_ii`. Empty unless step
    /// records are kept.
    pub log_diag_r: Vec<f64>,
    pub h_sequence: Vec<f64>,
    /// Running `h_0^n`.
    pub t_sequence: Vec<f64>,
    pub records: Vec<Record>,
    /// `Σ_n log(R_n)_ii` per column over the completed run.
    pub log_sums: Vec<f64>,
    /// `h_0^N` at the last re-orthonormalization.
    pub elapsed: f64,
    /// Left-point quadrature of `∫ tr Df(x(t)) dt` along the trajectory.
    pub trace_integral: f64,
    pub start_state: DVector<f64>,
    pub initial_v: DMatrix<f64>,
    pub final_state: DVector<f64>,
    pub final_v: DMatrix<f64>,
}

impl RunResult {
    /// Final plain estimates `μ_i(N)`.
    pub fn mu(&self) -> Vec<f64> {
        self.log_sums.iter().map(|s| s / self.elapsed).collect()
    }

    /// Final weighted estimates for `scheme`, if it was configured.
    pub fn mu_weighted(&self, scheme: WeightScheme) -> Option<Vec<f64>> {
        let idx = self.weight_schemes.iter().position(|s| *s == scheme)?;
        self.records.last().map(|r| r.mu_weighted[idx].clone())
    }

    pub fn log_diag_row(&self, n: usize) -> &[f64] {
        &self.log_diag_r[(n - 1) * self.k..n * self.k]
    }

    /// Time average of the Jacobian trace along the trajectory.
    pub fn mean_trace(&self) -> f64 {
        self.trace_integral / self.elapsed
    }

    /// Recomputes running averages for `scheme` from the stored tables.
    pub fn replay(&self, scheme: WeightScheme) -> Result<Vec<Vec<f64>>> {
        replay_averages(&self.log_diag_r, self.k, &self.h_sequence, scheme)
    }
}

/// A run that stopped early, with everything computed up to the failure.
#[derive(Debug, Error)]
#[error("{error}")]
pub struct RunError {
    pub error: Error,
    pub partial: Option<Box<RunResult>>,
}

impl From<Error> for RunError {
    fn from(error: Error) -> Self {
        RunError {
            error,
            partial: None,
        }
    }
}

impl From<RunError> for Error {
    fn from(e: RunError) -> Self {
        e.error
    }
}

fn with_step(e: Error, n: usize) -> Error {
    match e {
        Error::Overflow { h, .. } => Error::Overflow { step: n, h },
        Error::DegenerateBasis { index, value, .. } => Error::DegenerateBasis {
            step: n,
            index,
            value,
        },
        other => other,
    }
}

struct Accumulator {
    k: usize,
    schemes: Vec<WeightScheme>,
    keep: bool,
    log_sums: Vec<f64>,
    /// Σ_n log(R_n)_ii / h_n, the numerator of the uniform average.
    rate_sums: Vec<f64>,
    elapsed: f64,
    log_diag_r: Vec<f64>,
    h_sequence: Vec<f64>,
    t_sequence: Vec<f64>,
    records: Vec<Record>,
    trace_integral: f64,
}

impl Accumulator {
    fn new(config: &RunConfig) -> Self {
        let k = config.k;
        let cap = if config.keep_step_records {
            config.steps
        } else {
            0
        };
        Accumulator {
            k,
            schemes: config.weight_schemes.clone(),
            keep: config.keep_step_records,
            log_sums: vec![0.0; k],
            rate_sums: vec![0.0; k],
            elapsed: 0.0,
            log_diag_r: Vec::with_capacity(cap * k),
            h_sequence: Vec::with_capacity(cap),
            t_sequence: Vec::with_capacity(cap),
            records: Vec::new(),
            trace_integral: 0.0,
        }
    }

    /// Books a re-orthonormalization that closes a block of steps.
    fn close_block(&mut self, logs: &[f64], block_hs: &[f64], block_time: f64) {
        let len = block_hs.len() as f64;
        for i in 0..self.k {
            self.log_sums[i] += logs[i];
            self.rate_sums[i] += len * logs[i] / block_time;
        }
        if self.keep {
            if let [_] = block_hs {
                self.log_diag_r.extend_from_slice(logs);
            } else {
                // Spread the block's growth over its steps in proportion to h_n.
                for h in block_hs {
                    self.log_diag_r
                        .extend(logs.iter().map(|l| l * h / block_time));
                }
            }
        }
    }

    fn record(&mut self, n: usize, h: f64, t: f64) {
        let mu: Vec<f64> = self.log_sums.iter().map(|s| s / self.elapsed).collect();
        let mu_weighted = self
            .schemes
            .iter()
            .map(|scheme| match scheme {
                WeightScheme::Adaptive => mu.clone(),
                WeightScheme::Uniform => self.rate_sums.iter().map(|s| s / n as f64).collect(),
            })
            .collect();
        self.records.push(Record {
            n,
            h,
            t,
            mu,
            mu_weighted,
        });
    }

    fn finish(
        self,
        steps_completed: usize,
        start_state: DVector<f64>,
        initial_v: DMatrix<f64>,
        state: CoupledState,
    ) -> RunResult {
        RunResult {
            k: self.k,
            steps_completed,
            weight_schemes: self.schemes,
            log_diag_r: self.log_diag_r,
            h_sequence: self.h_sequence,
            t_sequence: self.t_sequence,
            records: self.records,
            log_sums: self.log_sums,
            elapsed: self.elapsed,
            trace_integral: self.trace_integral,
            start_state,
            initial_v,
            final_state: state.x,
            final_v: state.v,
        }
    }
}

/// Runs Benettin's algorithm.
///
/// On a solver overflow or a collapsed basis the error carries the partial
/// result up to the last completed re-orthonormalization.
pub fn run(config: &RunConfig) -> std::result::Result<RunResult, RunError> {
    config.validate()?;
    let sys = config.system.as_ref();
    let start_state = config.start_state()?;
    let initial_v = config.initial_basis()?;

    let mut acc = Accumulator::new(config);
    let mut state = CoupledState::new(start_state.clone(), initial_v.clone());
    let mut t = 0.0;
    let mut block_hs: Vec<f64> = Vec::with_capacity(config.qr_interval);
    let mut block_time = 0.0;
    let mut completed = 0;

    for n in 1..=config.steps {
        let outcome = (|| -> Result<()> {
            let h = config.schedule.stepsize(n)?;
            let trace = sys.jacobian_trace(&state.x);
            state = step(sys, config.solver, &state, h)?;
            acc.trace_integral += h * trace;
            t += h;
            block_hs.push(h);
            block_time += h;
            if acc.keep {
                acc.h_sequence.push(h);
                acc.t_sequence.push(t);
            }

            if n % config.qr_interval == 0 || n == config.steps {
                let (q, r) = qr_pos(&state.v)?;
                let logs: Vec<f64> = (0..config.k).map(|i| r[(i, i)].ln()).collect();
                acc.close_block(&logs, &block_hs, block_time);
                acc.elapsed = t;
                state.v = q;
                block_hs.clear();
                block_time = 0.0;
                completed = n;
                if n % config.record_every == 0 || n == config.steps {
                    acc.record(n, h, t);
                }
            }
            Ok(())
        })();

        if let Err(e) = outcome {
            if acc.keep {
                acc.h_sequence.truncate(completed);
                acc.t_sequence.truncate(completed);
            }
            let partial = acc.finish(completed, start_state, initial_v, state);
            return Err(RunError {
                error: with_step(e, n),
                partial: Some(Box::new(partial)),
            });
        }
    }

    Ok(acc.finish(completed, start_state, initial_v, state))
}

/// Running weighted averages recomputed from per-step records without
/// re-integrating. Entry `n-1` holds the `k` estimates after step `n`.
pub fn replay_averages(
    log_diag_r: &[f64],
    k: usize,
    h_sequence: &[f64],
    scheme: WeightScheme,
) -> Result<Vec<Vec<f64>>> {
    if k == 0 || log_diag_r.len() != h_sequence.len() * k {
        return Err(invalid(format!(
            "log-diagonal table has {} entries; expected {} steps x {k} exponents",
            log_diag_r.len(),
            h_sequence.len()
        )));
    }
    let mut sums = vec![0.0; k];
    let mut t = 0.0;
    let mut out = Vec::with_capacity(h_sequence.len());
    for (n, (row, &h)) in log_diag_r.chunks_exact(k).zip(h_sequence).enumerate() {
        t += h;
        match scheme {
            WeightScheme::Adaptive => {
                for (s, l) in sums.iter_mut().zip(row) {
                    *s += l;
                }
                out.push(sums.iter().map(|s| s / t).collect());
            }
            WeightScheme::Uniform => {
                for (s, l) in sums.iter_mut().zip(row) {
                    *s += l / h;
                }
                out.push(sums.iter().map(|s| s / (n + 1) as f64).collect());
            }
        }
    }
    Ok(out)
}
