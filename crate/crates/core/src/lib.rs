//! Lyapunov spectra with Benettin's algorithm under prescribed stepsize
//! schedules and weighted averages.
//!
//! The crate is organised bottom-up:
//!
//! - [`systems`]: vector fields, analytic Jacobians and the benchmark models
//!   (diagonal linear system, Lorenz-63, Lorenz-96).
//! - [`integrators`]: one-step solvers for the state coupled with its
//!   tangent-linear perturbations.
//! - [`schedules`]: stepsize sequences `h_n = h * h~_n` and the series
//!   conditions that govern convergence.
//! - [`weights`]: adaptive and uniform averaging weights.
//! - [`benettin`]: the propagate / re-orthonormalize / average loop.
//! - [`analysis`]: closed-form oracles, bounds and compound-matrix checks.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod benettin;
mod error;
pub mod integrators;
pub mod linalg;
pub mod schedules;
pub mod systems;
pub mod weights;

pub use error::{Error, Result};

pub use nalgebra::{DMatrix, DVector};
