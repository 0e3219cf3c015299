//! Analytic oracles and bound checkers for Benettin's algorithm.
//!
//! - Closed forms for the forward Euler method on `ẋ = diag(λ₁, λ₂) x`:
//!   [`mu1_closed_form`], [`mu1_bounds`], [`theoretical_limit`].
//! - The discrete Gronwall bound and the relative global error bound of the
//!   linearized system.
//! - Compound matrices (exterior powers), which turn sums of the first `L`
//!   exponents into the top exponent of `∧^L Φ` and give an independent route
//!   to the volumes Benettin's algorithm reads off `R`.
//! - Empirical diagnostics: strong fast invertibility ratios and rate fits.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::benettin::{qr_pos, RunConfig, RunResult};
use crate::error::{invalid, Error, Result};
use crate::integrators::{step, CoupledState};
use crate::linalg::{binomial, singular_values, spectral_norm};
use crate::schedules::StepsizeSchedule;

/// Largest ambient dimension for compound-matrix oracles.
pub const MAX_COMPOUND_DIM: usize = 8;
/// Longest horizon for oracles that multiply out every step map.
pub const MAX_PRODUCT_STEPS: usize = 1000;

/// Euler on `diag(λ₁, λ₂)` started from `V_0 = (α₁, α₂)ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOracleParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub schedule: StepsizeSchedule,
    pub steps: usize,
}

impl LinearOracleParams {
    fn validate(&self) -> Result<Vec<f64>> {
        if !(self.lambda1 > self.lambda2) {
            return Err(invalid("linear oracle needs lambda1 > lambda2"));
        }
        if self.alpha1 == 0.0 || !self.alpha1.is_finite() || !self.alpha2.is_finite() {
            return Err(invalid(
                "linear oracle needs a finite initial vector with alpha1 != 0",
            ));
        }
        if self.steps == 0 {
            return Err(invalid("linear oracle needs N >= 1"));
        }
        let hs = self.schedule.sequence(self.steps)?;
        for (i, h) in hs.iter().enumerate() {
            if !(1.0 + h * self.lambda1 > 0.0 && 1.0 + h * self.lambda2 > 0.0) {
                return Err(invalid(format!(
                    "1 + h_n lambda must stay positive; violated at n={} (h={h})",
                    i + 1
                )));
            }
        }
        Ok(hs)
    }
}

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Exact `μ₁(N)` of Benettin's algorithm for forward Euler on the diagonal
/// linear system.
pub fn mu1_closed_form(params: &LinearOracleParams) -> Result<f64> {
    let hs = params.validate()?;
    let (l1, l2) = (params.lambda1, params.lambda2);
    let mut t = 0.0;
    let mut growth = 0.0;
    let mut log_ratio = 0.0;
    for &h in &hs {
        t += h;
        let g1 = (h * l1).ln_1p();
        growth += g1;
        log_ratio += (h * l2).ln_1p() - g1;
    }
    let tail = if params.alpha2 == 0.0 {
        0.0
    } else {
        softplus(2.0 * (params.alpha2 / params.alpha1).abs().ln() + 2.0 * log_ratio)
    };
    Ok(growth / t + params.alpha1.abs().ln() / t + tail / (2.0 * t))
}

/// Limit `log(1 + hλ)/h` of Euler with constant stepsize `h`.
pub fn theoretical_limit(h: f64, lambda: f64) -> Result<f64> {
    if !(h > 0.0) || !(1.0 + h * lambda > 0.0) {
        return Err(invalid(format!(
            "theoretical limit needs h > 0 and 1 + h*lambda > 0 (h={h}, lambda={lambda})"
        )));
    }
    Ok((h * lambda).ln_1p() / h)
}

/// Lower and upper bounds on `μ₁(N)`, valid while `h_n λ₁ ≥ −1/2`.
pub fn mu1_bounds(params: &LinearOracleParams) -> Result<(f64, f64)> {
    let hs = params.validate()?;
    if let Some(h) = hs.iter().find(|h| **h * params.lambda1 < -0.5) {
        return Err(invalid(format!(
            "bounds need h_n*lambda1 >= -1/2; violated at h={h}"
        )));
    }
    let l1 = params.lambda1;
    let t: f64 = hs.iter().sum();
    let sum_sq: f64 = hs.iter().map(|h| h * h).sum();
    let offset = params.alpha1.abs().ln() / t;
    let lower = l1 - l1 * l1 * sum_sq / t + offset;
    let tail = if params.alpha2 == 0.0 {
        0.0
    } else {
        (2.0 * (params.alpha2 / params.alpha1).abs().ln()
            - 2.0 * t * (params.lambda1 - params.lambda2).abs()
            + 2.0 * l1 * l1 * sum_sq
            - (2.0 * t).ln())
        .exp()
    };
    let upper = l1 + offset + tail;
    Ok((lower, upper))
}

/// Discrete Gronwall bound `(Σ b_n) exp(Σ b_n)` over `b_1..b_N`.
pub fn gronwall_bound(b: &[f64], horizon: usize) -> Result<f64> {
    if b.len() < horizon {
        return Err(invalid(format!(
            "gronwall bound over {horizon} terms given {}",
            b.len()
        )));
    }
    if let Some(x) = b[..horizon].iter().find(|x| !(**x >= 0.0)) {
        return Err(invalid(format!(
            "gronwall sequence must be nonnegative, found {x}"
        )));
    }
    let s: f64 = b[..horizon].iter().sum();
    Ok(s * s.exp())
}

/// Largest sequence allowed by `a_N ≤ Σ_{n<N} (1 + a_n) b_{n+1}`, `a_0 = 0`:
/// `c_0 = 0`, `c_{n+1} = c_n + (1 + c_n) b_{n+1}`. Returns `c_0..c_N`.
pub fn gronwall_extremal(b: &[f64]) -> Vec<f64> {
    let mut c = Vec::with_capacity(b.len() + 1);
    c.push(0.0);
    let mut cur: f64 = 0.0;
    for &bn in b {
        cur += (1.0 + cur) * bn;
        c.push(cur);
    }
    c
}

/// Bound on `‖L_0^N − Φ_0^N‖ / ‖L_0^N‖` for a solver consistent of order
/// `p` with constant `c`.
pub fn relative_error_bound(
    c: f64,
    sched: &StepsizeSchedule,
    p: f64,
    horizon: usize,
) -> Result<f64> {
    if !(c > 0.0) || !(p > 0.0) {
        return Err(invalid(format!(
            "relative error bound needs c > 0 and p > 0 (c={c}, p={p})"
        )));
    }
    let b: Vec<f64> = sched
        .sequence(horizon)?
        .into_iter()
        .map(|h| c * h.powf(p + 1.0))
        .collect();
    gronwall_bound(&b, horizon)
}

/// Measured `‖L_0^N − Φ_0^N‖ / ‖L_0^N‖` for forward Euler on `diag(λ)`,
/// where both propagators are diagonal.
pub fn euler_relative_global_error(lambdas: &[f64], hs: &[f64]) -> f64 {
    let t: f64 = hs.iter().sum();
    let mut diff: f64 = 0.0;
    let mut norm: f64 = 0.0;
    for &l in lambdas {
        let exact = (l * t).exp();
        let euler: f64 = hs.iter().map(|h| 1.0 + h * l).product();
        diff = diff.max((exact - euler).abs());
        norm = norm.max(exact.abs());
    }
    diff / norm
}

/// Lexicographically ordered `L`-subsets of `{0, …, d-1}`.
pub fn subsets(d: usize, order: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, d: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..=d - left {
            cur.push(i);
            rec(i + 1, d, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::with_capacity(binomial(d, order));
    if order <= d {
        rec(0, d, order, &mut Vec::with_capacity(order), &mut out);
    }
    out
}

fn minor(a: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    let sub = DMatrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])]);
    sub.determinant()
}

/// `∧^L A`: the matrix of `L × L` minors in the lexicographic subset basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CompoundMatrix {
    pub dim: usize,
    pub order: usize,
    pub subsets: Vec<Vec<usize>>,
    pub entries: DMatrix<f64>,
}

impl CompoundMatrix {
    pub fn norm(&self) -> f64 {
        spectral_norm(&self.entries)
    }
}

fn check_compound_args(d: usize, order: usize) -> Result<()> {
    if d > MAX_COMPOUND_DIM {
        return Err(Error::Unsupported(format!(
            "compound matrices are limited to d <= {MAX_COMPOUND_DIM}, got d={d}"
        )));
    }
    if order == 0 || order > d {
        return Err(invalid(format!(
            "exterior power order L={order} must satisfy 1 <= L <= d={d}"
        )));
    }
    Ok(())
}

pub fn compound(a: &DMatrix<f64>, order: usize) -> Result<CompoundMatrix> {
    if !a.is_square() {
        return Err(invalid("compound matrix needs a square input"));
    }
    let d = a.nrows();
    check_compound_args(d, order)?;
    let subsets = subsets(d, order);
    let m = subsets.len();
    let entries = DMatrix::from_fn(m, m, |i, j| minor(a, &subsets[i], &subsets[j]));
    Ok(CompoundMatrix {
        dim: d,
        order,
        subsets,
        entries,
    })
}

/// Coordinates of `v_1 ∧ … ∧ v_L` (columns of `v`) in the subset basis.
pub fn wedge_coordinates(v: &DMatrix<f64>) -> Result<DVector<f64>> {
    let (d, order) = v.shape();
    check_compound_args(d, order)?;
    let cols: Vec<usize> = (0..order).collect();
    let subsets = subsets(d, order);
    Ok(DVector::from_iterator(
        subsets.len(),
        subsets.iter().map(|rows| minor(v, rows, &cols)),
    ))
}

/// `‖v_1 ∧ … ∧ v_L‖`, the `L`-volume spanned by the columns; `1` for `L = 0`.
pub fn wedge_norm(v: &DMatrix<f64>) -> Result<f64> {
    if v.ncols() == 0 {
        return Ok(1.0);
    }
    Ok(wedge_coordinates(v)?.norm())
}

/// Per-step tangent maps `Φ_1, …, Φ_N` along the configured trajectory.
pub fn tangent_step_maps(config: &RunConfig) -> Result<Vec<DMatrix<f64>>> {
    config.validate()?;
    if config.steps > MAX_PRODUCT_STEPS {
        return Err(Error::Unsupported(format!(
            "step-map products are limited to N <= {MAX_PRODUCT_STEPS}, got N={}",
            config.steps
        )));
    }
    let d = config.system.dim();
    let mut x = config.start_state()?;
    let mut maps = Vec::with_capacity(config.steps);
    for n in 1..=config.steps {
        let h = config.schedule.stepsize(n)?;
        let next = step(
            config.system.as_ref(),
            config.solver,
            &CoupledState::new(x, DMatrix::identity(d, d)),
            h,
        )?;
        x = next.x;
        maps.push(next.v);
    }
    Ok(maps)
}

/// `|Σ_{i≤L} μ_i(N) − (1/h_0^N) log ‖∧^L Φ_0^N (v_1 ∧ … ∧ v_L)‖|`, with the
/// right-hand side computed from the explicit product of step maps and its
/// `L × L` minors.
pub fn compound_volume_check(config: &RunConfig, result: &RunResult, order: usize) -> Result<f64> {
    let d = config.system.dim();
    check_compound_args(d, order)?;
    if order > result.k {
        return Err(invalid(format!(
            "L={order} exceeds the k={} propagated vectors",
            result.k
        )));
    }
    if result.steps_completed != config.steps {
        return Err(invalid("volume check needs a completed run"));
    }
    let maps = tangent_step_maps(config)?;
    let product = maps.iter().fold(DMatrix::identity(d, d), |acc, m| m * acc);
    let leading = result.initial_v.columns(0, order).into_owned();
    let image = compound(&product, order)?.entries * wedge_coordinates(&leading)?;
    let rhs = image.norm().ln() / result.elapsed;
    let lhs: f64 = result.log_sums[..order].iter().sum::<f64>() / result.elapsed;
    Ok((lhs - rhs).abs())
}

/// Margins (right side minus left side) of the exterior-power inequalities;
/// nonnegative when an inequality holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExteriorInequalities {
    /// `‖A‖^L − ‖∧^L A‖`.
    pub norm_power: f64,
    /// `‖u_1∧…∧u_k‖ ‖u_{k+1}∧…∧u_L‖ − ‖u_1∧…∧u_L‖` for the columns of `A`.
    pub wedge_split: f64,
    /// `C(d,L) (Σ_j ‖A‖^{L−j} ‖B‖^{j−1}) ‖A − B‖ − ‖∧^L A − ∧^L B‖`.
    pub lipschitz: f64,
    /// Magnitude of the compared quantities, for relative tolerances.
    pub scale: f64,
}

impl ExteriorInequalities {
    pub fn all_hold(&self, rel_tol: f64) -> bool {
        let slack = -rel_tol * self.scale.max(1.0);
        self.norm_power >= slack && self.wedge_split >= slack && self.lipschitz >= slack
    }

    pub fn min_margin(&self) -> f64 {
        self.norm_power.min(self.wedge_split).min(self.lipschitz)
    }
}

pub fn exterior_inequalities_check(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    order: usize,
    split: usize,
) -> Result<ExteriorInequalities> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(invalid(
            "exterior inequalities need square matrices of equal size",
        ));
    }
    let d = a.nrows();
    if d > 6 {
        return Err(Error::Unsupported(format!(
            "exterior inequality check limited to d <= 6, got {d}"
        )));
    }
    check_compound_args(d, order)?;
    if split > order {
        return Err(invalid(format!(
            "split k={split} must not exceed L={order}"
        )));
    }
    let na = spectral_norm(a);
    let nb = spectral_norm(b);
    let ca = compound(a, order)?;
    let cb = compound(b, order)?;

    let power = na.powi(order as i32);
    let norm_power = power - ca.norm();

    let cols = a.columns(0, order).into_owned();
    let whole = wedge_norm(&cols)?;
    let head = wedge_norm(&a.columns(0, split).into_owned())?;
    let tail = wedge_norm(&a.columns(split, order - split).into_owned())?;
    let wedge_split = head * tail - whole;

    let poly: f64 = (1..=order)
        .map(|j| na.powi((order - j) as i32) * nb.powi(j as i32 - 1))
        .sum();
    let bound = binomial(d, order) as f64 * poly * spectral_norm(&(a - b));
    let lipschitz = bound - spectral_norm(&(&ca.entries - &cb.entries));

    Ok(ExteriorInequalities {
        norm_power,
        wedge_split,
        lipschitz,
        scale: power.max(head * tail).max(bound),
    })
}

/// Relative residuals of the exterior-power identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExteriorIdentities {
    /// `∧^L I = I`.
    pub identity: f64,
    /// `∧^L (AB) = ∧^L A · ∧^L B`.
    pub product: f64,
    /// `(∧^L A)^{-1} = ∧^L A^{-1}`.
    pub inverse: f64,
    /// `‖∧^L A‖ = σ_1(A) ⋯ σ_L(A)`.
    pub singular_values: f64,
    /// `‖∧^L A (v_1 ∧ … ∧ v_L)‖ = r_11 ⋯ r_LL` for `A V_0 = QR`, with `V_0`
    /// the first `L` columns of `B`.
    pub qr_volume: f64,
}

impl ExteriorIdentities {
    pub fn max_residual(&self) -> f64 {
        [
            self.identity,
            self.product,
            self.inverse,
            self.singular_values,
            self.qr_volume,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn rel_diff(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    (x - y).abs().max() / x.abs().max().max(y.abs().max()).max(1e-300)
}

pub fn exterior_identity_residuals(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    order: usize,
) -> Result<ExteriorIdentities> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(invalid(
            "exterior identities need square matrices of equal size",
        ));
    }
    let d = a.nrows();
    check_compound_args(d, order)?;
    let m = binomial(d, order);
    let ci = compound(&DMatrix::identity(d, d), order)?;
    let identity = rel_diff(&ci.entries, &DMatrix::identity(m, m));

    let ca = compound(a, order)?;
    let cb = compound(b, order)?;
    let cab = compound(&(a * b), order)?;
    let product = rel_diff(&cab.entries, &(&ca.entries * &cb.entries));

    let inverse = match (a.clone().try_inverse(), ca.entries.clone().try_inverse()) {
        (Some(ainv), Some(cainv)) => rel_diff(&compound(&ainv, order)?.entries, &cainv),
        _ => f64::NAN,
    };

    let sv = singular_values(a);
    let top: f64 = sv[..order].iter().product();
    let singular_values = (ca.norm() - top).abs() / top.max(1e-300);

    let v0 = b.columns(0, order).into_owned();
    let (_, r) = qr_pos(&(a * &v0))?;
    let diag: f64 = (0..order).map(|i| r[(i, i)]).product();
    let vol = (&ca.entries * wedge_coordinates(&v0)?).norm();
    let qr_volume = (vol - diag).abs() / diag.max(1e-300);

    Ok(ExteriorIdentities {
        identity,
        product,
        inverse,
        singular_values,
        qr_volume,
    })
}

/// Minimum over sampled splits `(t, s)` of
/// `Π_{i≤L} σ_i(Φ_0^{t+s}) / (σ_i(Φ_t^{t+s}) σ_i(Φ_0^t))`.
///
/// A value bounded away from zero is consistent with strong fast
/// invertibility at index `L`; it is not a proof.
pub fn fast_invertibility_diagnostic(
    maps: &[DMatrix<f64>],
    order: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let n = maps.len();
    if n < 2 {
        return Err(invalid(
            "fast invertibility diagnostic needs at least 2 step maps",
        ));
    }
    if n > MAX_PRODUCT_STEPS {
        return Err(Error::Unsupported(format!(
            "fast invertibility diagnostic limited to N <= {MAX_PRODUCT_STEPS}, got {n}"
        )));
    }
    let d = maps[0].nrows();
    check_compound_args(d, order)?;
    if samples == 0 {
        return Err(invalid(
            "fast invertibility diagnostic needs at least one sample",
        ));
    }
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(DMatrix::<f64>::identity(d, d));
    for m in maps {
        let next = m * prefix.last().unwrap();
        prefix.push(next);
    }
    let top = |m: &DMatrix<f64>| -> Vec<f64> { singular_values(m)[..order].to_vec() };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let head_len = rng.random_range(1..n);
        let tail_len = rng.random_range(1..=n - head_len);
        let tail = maps[head_len..head_len + tail_len]
            .iter()
            .fold(DMatrix::identity(d, d), |acc, m| m * acc);
        let comp = top(&prefix[head_len + tail_len]);
        let head = top(&prefix[head_len]);
        let tail = top(&tail);
        let ratio: f64 = (0..order).map(|i| comp[i] / (tail[i] * head[i])).product();
        worst = worst.min(ratio);
    }
    Ok(worst)
}

/// Asymptotic error models for [`rate_fit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateModel {
    LogNOverSqrtN,
    OneOverSqrtN,
    OneOverLogN,
    Constant,
}

impl RateModel {
    pub const ALL: [RateModel; 4] = [
        RateModel::LogNOverSqrtN,
        RateModel::OneOverSqrtN,
        RateModel::OneOverLogN,
        RateModel::Constant,
    ];

    fn log_shape(self, n: f64) -> f64 {
        match self {
            RateModel::LogNOverSqrtN => n.ln().ln() - 0.5 * n.ln(),
            RateModel::OneOverSqrtN => -0.5 * n.ln(),
            RateModel::OneOverLogN => -n.ln().ln(),
            RateModel::Constant => 0.0,
        }
    }
}

impl fmt::Display for RateModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateModel::LogNOverSqrtN => "logN_over_sqrtN",
            RateModel::OneOverSqrtN => "one_over_sqrtN",
            RateModel::OneOverLogN => "one_over_logN",
            RateModel::Constant => "constant",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub model: RateModel,
    /// Fitted `C` in `error ≈ C · g(N)`.
    pub constant: f64,
    /// Root-mean-square deviation of `log(error)` from the fitted model.
    pub residual: f64,
}

/// Fits `log(error) = log C + log g(N)` by least squares over `(N, error)`
/// pairs.
pub fn rate_fit(samples: &[(f64, f64)], model: RateModel) -> Result<RateFit> {
    if samples.len() < 10 {
        return Err(invalid(format!(
            "rate fit needs at least 10 samples, got {}",
            samples.len()
        )));
    }
    if let Some((n, e)) = samples.iter().find(|(n, e)| !(*e > 0.0) || !(*n > 1.0)) {
        return Err(invalid(format!(
            "rate fit needs N > 1 and positive errors, got ({n}, {e})"
        )));
    }
    let devs: Vec<f64> = samples
        .iter()
        .map(|&(n, e)| e.ln() - model.log_shape(n))
        .collect();
    let log_c = devs.iter().sum::<f64>() / devs.len() as f64;
    let residual =
        (devs.iter().map(|d| (d - log_c).powi(2)).sum::<f64>() / devs.len() as f64).sqrt();
    Ok(RateFit {
        model,
        constant: log_c.exp(),
        residual,
    })
}

/// The model with the smallest residual among `models`.
pub fn best_rate_model(samples: &[(f64, f64)], models: &[RateModel]) -> Result<RateFit> {
    let mut best: Option<RateFit> = None;
    for &m in models {
        let fit = rate_fit(samples, m)?;
        if best.is_none_or(|b| fit.residual < b.residual) {
            best = Some(fit);
        }
    }
    best.ok_or_else(|| invalid("no rate models given"))
}
