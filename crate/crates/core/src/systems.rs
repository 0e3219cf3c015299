//! Autonomous ODE systems `ẋ = f(x)` with analytic Jacobians.
//!
//! Every system implements [`DynamicalSystem`]. Systems whose flow is known
//! in closed form (the diagonal linear benchmark) additionally expose the
//! exact flow and the exact tangent propagator, which the `exact` solver and
//! the local-error oracle rely on.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::linalg::all_finite_vec;

/// Shared, immutable handle to a system.
pub type SystemRef = Arc<dyn DynamicalSystem>;

pub trait DynamicalSystem: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn field(&self, x: &DVector<f64>) -> DVector<f64>;

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;

    /// `Df(x) · v`. Sparse systems override this to skip the dense product.
    fn jacobian_apply(&self, x: &DVector<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
        self.jacobian(x) * v
    }

    fn jacobian_trace(&self, x: &DVector<f64>) -> f64 {
        self.jacobian(x).trace()
    }

    /// Exact flow over time `h`, if known in closed form.
    fn exact_flow(&self, _x: &DVector<f64>, _h: f64) -> Option<DVector<f64>> {
        None
    }

    /// Exact tangent propagator `L_x^h`, if known in closed form.
    fn exact_tangent(&self, _x: &DVector<f64>, _h: f64) -> Option<DMatrix<f64>> {
        None
    }

    fn has_exact(&self) -> bool {
        false
    }
}

/// Checks that a state has the system's dimension and finite entries.
pub fn validate_state(sys: &dyn DynamicalSystem, x: &DVector<f64>) -> Result<()> {
    if x.len() != sys.dim() {
        return Err(invalid(format!(
            "state has length {} but {} has dimension {}",
            x.len(),
            sys.name(),
            sys.dim()
        )));
    }
    if !all_finite_vec(x) {
        return Err(invalid("state contains non-finite entries"));
    }
    Ok(())
}

/// `ẋ = diag(λ₁, …, λ_d) x` with strictly decreasing `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDiagonal {
    diag: Vec<f64>,
}

impl LinearDiagonal {
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    fn exp_diag(&self, h: f64) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.diag.len(),
            self.diag.iter().map(|l| (l * h).exp()),
        ))
    }
}

pub fn make_linear_diagonal(diag: &[f64]) -> Result<LinearDiagonal> {
    if diag.is_empty() {
        return Err(invalid("diagonal must be nonempty"));
    }
    if diag.iter().any(|l| !l.is_finite()) {
        return Err(invalid("diagonal entries must be finite"));
    }
    if diag.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("diagonal entries must be strictly decreasing"));
    }
    Ok(LinearDiagonal {
        diag: diag.to_vec(),
    })
}

impl DynamicalSystem for LinearDiagonal {
    fn name(&self) -> &str {
        "linear-diagonal"
    }

    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn field(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(x.len(), x.iter().zip(&self.diag).map(|(xi, l)| l * xi))
    }

    fn jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.diag))
    }

    fn jacobian_apply(&self, _x: &DVector<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = v.clone();
        for (mut row, l) in out.row_iter_mut().zip(&self.diag) {
            row *= *l;
        }
        out
    }

    fn jacobian_trace(&self, _x: &DVector<f64>) -> f64 {
        self.diag.iter().sum()
    }

    fn exact_flow(&self, x: &DVector<f64>, h: f64) -> Option<DVector<f64>> {
        Some(DVector::from_iterator(
            x.len(),
            x.iter().zip(&self.diag).map(|(xi, l)| (l * h).exp() * xi),
        ))
    }

    fn exact_tangent(&self, _x: &DVector<f64>, h: f64) -> Option<DMatrix<f64>> {
        Some(self.exp_diag(h))
    }

    fn has_exact(&self) -> bool {
        true
    }
}

/// `ẋ = A x` for a general constant square matrix.
///
/// The exact propagator is `e^{Ah}`, evaluated with a Padé approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    a: DMatrix<f64>,
}

pub fn make_linear(a: DMatrix<f64>) -> Result<LinearSystem> {
    if a.nrows() == 0 || !a.is_square() {
        return Err(invalid("linear system matrix must be square and nonempty"));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(invalid("linear system matrix must be finite"));
    }
    Ok(LinearSystem { a })
}

impl LinearSystem {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }
}

impl DynamicalSystem for LinearSystem {
    fn name(&self) -> &str {
        "linear"
    }

    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn field(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x
    }

    fn jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.a.clone()
    }

    fn exact_flow(&self, x: &DVector<f64>, h: f64) -> Option<DVector<f64>> {
        Some((&self.a * h).exp() * x)
    }

    fn exact_tangent(&self, _x: &DVector<f64>, h: f64) -> Option<DMatrix<f64>> {
        Some((&self.a * h).exp())
    }

    fn has_exact(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lorenz63 {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

pub fn make_lorenz63(sigma: f64, rho: f64, beta: f64) -> Result<Lorenz63> {
    if !(sigma.is_finite() && rho.is_finite() && beta.is_finite()) {
        return Err(invalid("Lorenz-63 parameters must be finite"));
    }
    Ok(Lorenz63 { sigma, rho, beta })
}

impl Lorenz63 {
    pub fn classical() -> Self {
        Lorenz63 {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
        }
    }
}

impl DynamicalSystem for Lorenz63 {
    fn name(&self) -> &str {
        "lorenz63"
    }

    fn dim(&self) -> usize {
        3
    }

    fn field(&self, x: &DVector<f64>) -> DVector<f64> {
        let (x1, x2, x3) = (x[0], x[1], x[2]);
        DVector::from_vec(vec![
            self.sigma * (x2 - x1),
            x1 * (self.rho - x3) - x2,
            x1 * x2 - self.beta * x3,
        ])
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let (x1, x2, x3) = (x[0], x[1], x[2]);
        DMatrix::from_row_slice(
            3,
            3,
            &[
                -self.sigma,
                self.sigma,
                0.0,
                self.rho - x3,
                -1.0,
                -x1,
                x2,
                x1,
                -self.beta,
            ],
        )
    }

    fn jacobian_trace(&self, _x: &DVector<f64>) -> f64 {
        -(self.sigma + 1.0 + self.beta)
    }
}

/// Lorenz-96 on a periodic lattice of `d ≥ 4` sites with forcing `F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lorenz96 {
    d: usize,
    pub forcing: f64,
}

pub fn make_lorenz96(d: usize, forcing: f64) -> Result<Lorenz96> {
    if d < 4 {
        return Err(invalid(format!("Lorenz-96 needs d >= 4, got {d}")));
    }
    if !forcing.is_finite() {
        return Err(invalid("Lorenz-96 forcing must be finite"));
    }
    Ok(Lorenz96 { d, forcing })
}

impl Lorenz96 {
    #[inline]
    fn wrap(&self, i: usize, offset: isize) -> usize {
        (i as isize + offset).rem_euclid(self.d as isize) as usize
    }
}

impl DynamicalSystem for Lorenz96 {
    fn name(&self) -> &str {
        "lorenz96"
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn field(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.d, |i, _| {
            let (m2, m1, p1) = (self.wrap(i, -2), self.wrap(i, -1), self.wrap(i, 1));
            (x[p1] - x[m2]) * x[m1] - x[i] + self.forcing
        })
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.d, self.d);
        for i in 0..self.d {
            let (m2, m1, p1) = (self.wrap(i, -2), self.wrap(i, -1), self.wrap(i, 1));
            j[(i, m2)] = -x[m1];
            j[(i, m1)] = x[p1] - x[m2];
            j[(i, i)] = -1.0;
            j[(i, p1)] = x[m1];
        }
        j
    }

    fn jacobian_apply(&self, x: &DVector<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
        let k = v.ncols();
        let mut out = DMatrix::zeros(self.d, k);
        for i in 0..self.d {
            let (m2, m1, p1) = (self.wrap(i, -2), self.wrap(i, -1), self.wrap(i, 1));
            let a = -x[m1];
            let b = x[p1] - x[m2];
            let c = x[m1];
            for col in 0..k {
                out[(i, col)] =
                    a * v[(m2, col)] + b * v[(m1, col)] - v[(i, col)] + c * v[(p1, col)];
            }
        }
        out
    }

    fn jacobian_trace(&self, _x: &DVector<f64>) -> f64 {
        -(self.d as f64)
    }
}

/// Central-difference approximation of `Df(x)`.
pub fn finite_difference_jacobian(
    sys: &dyn DynamicalSystem,
    x: &DVector<f64>,
    eps: f64,
) -> Result<DMatrix<f64>> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(invalid(format!(
            "finite-difference step must be positive, got {eps}"
        )));
    }
    validate_state(sys, x)?;
    let d = sys.dim();
    let mut jac = DMatrix::zeros(d, d);
    for j in 0..d {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += eps;
        xm[j] -= eps;
        let col = (sys.field(&xp) - sys.field(&xm)) / (2.0 * eps);
        jac.set_column(j, &col);
    }
    Ok(jac)
}
