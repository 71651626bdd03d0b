//! Phase-only least squares `min ||d + A phi||_2  s.t.  |phi(k)| = 1` by
//! gradient projection onto the unit circle.
//!
//! The step `0.9 / lambda_max(A^H A)` makes each iteration minimise a
//! majorizer of the objective, so the objective sequence never increases.

use nalgebra::Complex;

use super::{check_ls_dims, LsSolution, SolverOptions};
use crate::error::{Error, Result};
use crate::linalg::{gram_lambda_max, unit_phasor, CMatrix, CVector};
use crate::reflection::{ReflectionMode, ReflectionVector};
use crate::scalar::{lit, Real};

const STEP_FRACTION: f64 = 0.9;

/// Starting phases `exp(j angle(-A^+ d))`, or `exp(j angle(-A^H d))` when `A`
/// is rank deficient.
pub fn initial_phases<T: Real>(a: &CMatrix<T>, d: &CVector<T>) -> CVector<T> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(T::zero(), |m, s| if s > m { s } else { m });
    let eps = smax * lit(1e-12) * lit((a.nrows().max(a.ncols())) as f64);
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    let raw = if smax > T::zero() && rank == a.nrows().min(a.ncols()) {
        match svd.solve(d, eps) {
            Ok(x) => -x,
            Err(_) => -a.ad_mul(d),
        }
    } else {
        -a.ad_mul(d)
    };
    raw.map(unit_phasor)
}

pub fn solve_unit_modulus_gp<T: Real>(a: &CMatrix<T>, d: &CVector<T>, opts: &SolverOptions) -> Result<LsSolution<T>> {
    check_ls_dims(a, d)?;
    opts.validate()?;
    let lmax = gram_lambda_max(a);
    let mut phi = initial_phases(a, d);
    let objective = |p: &CVector<T>| (d + a * p).norm_squared();
    let mut f = objective(&phi);
    let mut trace = vec![f];
    if !(lmax > T::zero()) {
        // The cascade is identically zero, so any unit-modulus point is optimal.
        return Ok(LsSolution {
            phi: ReflectionVector::unchecked(phi, ReflectionMode::Conventional),
            residual: f.sqrt(),
            iterations: 0,
            converged: true,
            trace,
        });
    }
    if !f.is_finite() {
        return Err(Error::Numerical("unit-modulus gradient projection: non-finite objective".into()));
    }
    let beta = Complex::new(lit::<T>(STEP_FRACTION) / lmax, T::zero());
    let tol = lit::<T>(opts.tol);
    let tiny = lit::<T>(1e-300_f64.max(f64::MIN_POSITIVE));

    // With the Gram matrix one K x K product per step gives both the next
    // objective and the next gradient. The product runs on split real parts.
    let gram = a.ad_mul(a);
    let (gram_re, gram_im) = (gram.map(|z| z.re), gram.map(|z| z.im));
    let gram_mul = |p: &CVector<T>| {
        let (pr, pi) = (p.map(|z| z.re), p.map(|z| z.im));
        let re = &gram_re * &pr - &gram_im * &pi;
        let im = &gram_re * &pi + &gram_im * &pr;
        CVector::<T>::from_fn(p.len(), |i, _| Complex::new(re[i], im[i]))
    };
    let atd = a.ad_mul(d);
    let dd = d.norm_squared();
    let two = lit::<T>(2.0);
    let gram_objective = |p: &CVector<T>, gp: &CVector<T>| p.dotc(gp).re + two * atd.dotc(p).re + dd;
    let mut gphi = gram_mul(&phi);

    let mut converged = false;
    let mut iterations = 0;
    for iter in 1..=opts.max_iters {
        iterations = iter;
        let grad = &gphi + &atd;
        let next = (&phi - grad * beta).map(unit_phasor);
        let gnext = gram_mul(&next);
        let f_next = gram_objective(&next, &gnext);
        if f_next > f {
            // Only rounding can push the majorizer step uphill; keep the incumbent.
            converged = true;
            break;
        }
        let change = f - f_next;
        phi = next;
        gphi = gnext;
        f = f_next;
        trace.push(f);
        if change <= tol * (f + change).max(tiny) {
            converged = true;
            break;
        }
    }

    let f = objective(&phi);
    Ok(LsSolution {
        phi: ReflectionVector::unchecked(phi, ReflectionMode::Conventional),
        residual: f.sqrt(),
        iterations,
        converged,
        trace,
    })
}
