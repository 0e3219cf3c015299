//! One-step solvers for the state coupled with its tangent-linear perturbations.
//!
//! A step advances `(x, V)` where the columns of `V` evolve under
//! `V̇ = Df(x) V`. The Runge-Kutta solver treats `(x, V)` as one augmented
//! system and evaluates the Jacobian at every stage state, so the tangent map
//! inherits the order of the scheme.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::linalg::{all_finite_mat, all_finite_vec, spectral_norm};
use crate::systems::DynamicalSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Euler,
    Rk4,
    /// Closed-form flow and propagator; only for systems that provide them.
    Exact,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Euler => "euler",
            Method::Rk4 => "rk4",
            Method::Exact => "exact",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "euler" => Ok(Method::Euler),
            "rk4" => Ok(Method::Rk4),
            "exact" => Ok(Method::Exact),
            other => Err(invalid(format!(
                "unknown solver '{other}' (expected euler|rk4|exact)"
            ))),
        }
    }
}

/// Consistency order `p`: `‖Φ_x^h − L_x^h‖ ≤ c h^{p+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    Finite(f64),
    Exact,
}

impl Order {
    /// Finite value of `p`, or `None` for the exact solver.
    pub fn value(self) -> Option<f64> {
        match self {
            Order::Finite(p) => Some(p),
            Order::Exact => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SolverSpec {
    pub method: Method,
}

impl SolverSpec {
    pub const EULER: SolverSpec = SolverSpec {
        method: Method::Euler,
    };
    pub const RK4: SolverSpec = SolverSpec {
        method: Method::Rk4,
    };
    pub const EXACT: SolverSpec = SolverSpec {
        method: Method::Exact,
    };

    pub fn new(method: Method) -> Self {
        SolverSpec { method }
    }

    pub fn order(&self) -> Order {
        match self.method {
            Method::Euler => Order::Finite(1.0),
            Method::Rk4 => Order::Finite(4.0),
            Method::Exact => Order::Exact,
        }
    }

    /// Rejects the exact solver for systems without a closed-form flow.
    pub fn check_supported(&self, sys: &dyn DynamicalSystem) -> Result<()> {
        if self.method == Method::Exact && !sys.has_exact() {
            return Err(Error::Unsupported(format!(
                "exact solver requested but {} has no closed-form flow",
                sys.name()
            )));
        }
        Ok(())
    }
}

/// State together with the current perturbation basis (columns of `v`).
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub x: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl CoupledState {
    pub fn new(x: DVector<f64>, v: DMatrix<f64>) -> Self {
        CoupledState { x, v }
    }
}

fn check_stepsize(h: f64) -> Result<()> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(invalid(format!("stepsize must lie in (0, 1], got {h}")));
    }
    Ok(())
}

fn check_dims(sys: &dyn DynamicalSystem, cs: &CoupledState) -> Result<()> {
    let d = sys.dim();
    if cs.x.len() != d || cs.v.nrows() != d {
        return Err(invalid(format!(
            "coupled state has x of length {} and V with {} rows; system dimension is {d}",
            cs.x.len(),
            cs.v.nrows()
        )));
    }
    Ok(())
}

fn rk4_state(sys: &dyn DynamicalSystem, x: &DVector<f64>, h: f64) -> DVector<f64> {
    let k1 = sys.field(x);
    let x2 = x + &k1 * (0.5 * h);
    let k2 = sys.field(&x2);
    let x3 = x + &k2 * (0.5 * h);
    let k3 = sys.field(&x3);
    let x4 = x + &k3 * h;
    let k4 = sys.field(&x4);
    x + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0)
}

/// Advances `(x, V)` by one step of size `h`.
pub fn step(
    sys: &dyn DynamicalSystem,
    solver: SolverSpec,
    cs: &CoupledState,
    h: f64,
) -> Result<CoupledState> {
    check_stepsize(h)?;
    check_dims(sys, cs)?;
    solver.check_supported(sys)?;
    let x = &cs.x;
    let v = &cs.v;
    let next = match solver.method {
        Method::Euler => {
            let x_new = x + sys.field(x) * h;
            let v_new = v + sys.jacobian_apply(x, v) * h;
            CoupledState::new(x_new, v_new)
        }
        Method::Rk4 => {
            let k1 = sys.field(x);
            let kv1 = sys.jacobian_apply(x, v);
            let x2 = x + &k1 * (0.5 * h);
            let v2 = v + &kv1 * (0.5 * h);
            let k2 = sys.field(&x2);
            let kv2 = sys.jacobian_apply(&x2, &v2);
            let x3 = x + &k2 * (0.5 * h);
            let v3 = v + &kv2 * (0.5 * h);
            let k3 = sys.field(&x3);
            let kv3 = sys.jacobian_apply(&x3, &v3);
            let x4 = x + &k3 * h;
            let v4 = v + &kv3 * h;
            let k4 = sys.field(&x4);
            let kv4 = sys.jacobian_apply(&x4, &v4);
            CoupledState::new(
                x + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0),
                v + (kv1 + (kv2 + kv3) * 2.0 + kv4) * (h / 6.0),
            )
        }
        Method::Exact => {
            let x_new = sys.exact_flow(x, h).expect("checked by check_supported");
            let l = sys.exact_tangent(x, h).expect("checked by check_supported");
            CoupledState::new(x_new, l * v)
        }
    };
    if !all_finite_vec(&next.x) || !all_finite_mat(&next.v) {
        return Err(Error::Overflow { step: 0, h });
    }
    Ok(next)
}

/// Advances the state only, skipping the tangent propagation.
pub fn step_nonlinear(
    sys: &dyn DynamicalSystem,
    solver: SolverSpec,
    x: &DVector<f64>,
    h: f64,
) -> Result<DVector<f64>> {
    check_stepsize(h)?;
    if x.len() != sys.dim() {
        return Err(invalid("state length does not match system dimension"));
    }
    solver.check_supported(sys)?;
    let next = match solver.method {
        Method::Euler => x + sys.field(x) * h,
        Method::Rk4 => rk4_state(sys, x, h),
        Method::Exact => sys.exact_flow(x, h).expect("checked by check_supported"),
    };
    if !all_finite_vec(&next) {
        return Err(Error::Overflow { step: 0, h });
    }
    Ok(next)
}

/// The solver's one-step tangent map `Φ_x^h` as a `d × d` matrix.
pub fn tangent_map(
    sys: &dyn DynamicalSystem,
    solver: SolverSpec,
    x: &DVector<f64>,
    h: f64,
) -> Result<DMatrix<f64>> {
    let d = sys.dim();
    let cs = CoupledState::new(x.clone(), DMatrix::identity(d, d));
    Ok(step(sys, solver, &cs, h)?.v)
}

/// `‖Φ_x^h − L_x^h‖` in the operator 2-norm.
pub fn local_error(
    sys: &dyn DynamicalSystem,
    solver: SolverSpec,
    x: &DVector<f64>,
    h: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&h) {
        return Err(invalid(format!("stepsize must lie in [0, 1], got {h}")));
    }
    let exact = sys.exact_tangent(x, h).ok_or_else(|| {
        Error::Unsupported(format!("{} has no exact tangent propagator", sys.name()))
    })?;
    if h == 0.0 {
        return Ok(0.0);
    }
    let numeric = tangent_map(sys, solver, x, h)?;
    Ok(spectral_norm(&(numeric - exact)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrderEstimate {
    Finite(f64),
    /// Local errors vanished identically.
    Exact,
}

/// Empirical consistency order: least-squares slope of `log(local_error)`
/// against `log(h)`, minus one.
pub fn estimate_order(
    sys: &dyn DynamicalSystem,
    solver: SolverSpec,
    x: &DVector<f64>,
    h_list: &[f64],
) -> Result<OrderEstimate> {
    if h_list.len() < 3 {
        return Err(invalid("order estimation needs at least 3 stepsizes"));
    }
    if h_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid(
            "stepsizes for order estimation must be strictly decreasing",
        ));
    }
    let mut pts = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let err = local_error(sys, solver, x, h)?;
        if err == 0.0 {
            return Ok(OrderEstimate::Exact);
        }
        pts.push((h.ln(), err.ln()));
    }
    Ok(OrderEstimate::Finite(least_squares_slope(&pts) - 1.0))
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
