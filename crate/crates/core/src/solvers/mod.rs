//! Optimisation kernels shared by the applications.
//!
//! * [`disk_ls`]: `min ||d + A phi||_2` subject to `|phi(k)| <= 1` (convex).
//! * [`unit_modulus`]: the same objective with `|phi(k)| = 1`, by gradient projection.
//! * [`sdp`]: linear or max-min objectives over Hermitian PSD matrices with
//!   bounded diagonal, by a primal-dual interior-point method.

pub mod disk_ls;
pub mod sdp;
pub mod unit_modulus;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::scalar::Real;

pub use disk_ls::solve_disk_ls;
pub use sdp::{solve_sdp, AffineForm, LinearConstraint, SdpObjective, SdpProblem, SdpSolution, SdpStatus, Sense};
pub use unit_modulus::solve_unit_modulus_gp;

/// Step-size policy of the first-order solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepRule {
    /// Constant step derived from `lambda_max(A^H A)`.
    FixedSafeStep,
    /// Start from a longer step and halve it until the objective decreases enough.
    Backtracking,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub step_rule: StepRule,
}

impl SolverOptions {
    /// Defaults for the least-squares kernels.
    pub fn least_squares() -> Self {
        Self {
            max_iters: 200_000,
            tol: 1e-8,
            step_rule: StepRule::FixedSafeStep,
        }
    }

    /// Defaults for the interior-point SDP solver.
    pub fn sdp() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-6,
            step_rule: StepRule::FixedSafeStep,
        }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidArgument(format!(
                "solver options need tol > 0 and max_iters >= 1 (got tol={}, max_iters={})",
                self.tol, self.max_iters
            )));
        }
        Ok(())
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self::least_squares()
    }
}

/// Output of the least-squares kernels.
#[derive(Debug, Clone)]
pub struct LsSolution<T: Real> {
    pub phi: crate::ReflectionVector<T>,
    /// `||d + A phi||_2` at the returned point.
    pub residual: T,
    pub iterations: usize,
    pub converged: bool,
    /// Squared objective after every iteration (index 0 is the starting point).
    pub trace: Vec<T>,
}

pub(crate) fn check_ls_dims<T: Real>(a: &CMatrix<T>, d: &CVector<T>) -> Result<()> {
    if a.nrows() != d.len() {
        return Err(Error::dims("d", a.nrows(), d.len()));
    }
    if a.ncols() == 0 || a.nrows() == 0 {
        return Err(Error::dims("A", "non-empty matrix", format!("{}x{}", a.nrows(), a.ncols())));
    }
    Ok(())
}

/// `||d + A phi||_2^2`.
pub fn ls_objective<T: Real>(a: &CMatrix<T>, d: &CVector<T>, phi: &CVector<T>) -> T {
    (d + a * phi).norm_squared()
}

/// Gradient of `||d + A phi||^2` with respect to `(Re phi, Im phi)`, packed
/// as `df/dRe + j df/dIm = 2 A^H (d + A phi)`.
pub fn ls_gradient<T: Real>(a: &CMatrix<T>, d: &CVector<T>, phi: &CVector<T>) -> CVector<T> {
    let r = d + a * phi;
    (a.ad_mul(&r)) * nalgebra::Complex::new(crate::scalar::lit::<T>(2.0), T::zero())
}
