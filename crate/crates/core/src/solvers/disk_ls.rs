//! Disk-constrained complex least squares:
//! `min ||d + A phi||_2  s.t.  |phi(k)| <= 1`.
//!
//! Monotone accelerated projected gradient (MFISTA) with adaptive restart.
//! The projection onto the feasible set is `phi(k) / max(1, |phi(k)|)`.
//! Convergence is declared when the gradient mapping
//! `L (phi - P(phi - grad / L))` is below `tol * ||A^H d||_inf` (the tolerance
//! is floored at a small multiple of machine epsilon), or when the objective
//! has not decreased for a long run of iterations.

use nalgebra::{Complex, ComplexField};

use super::{check_ls_dims, LsSolution, SolverOptions, StepRule};
use crate::error::{Error, Result};
use crate::linalg::{gram_lambda_max, CMatrix, CVector};
use crate::reflection::{ReflectionMode, ReflectionVector};
use crate::scalar::{lit, to_f64, Real};

const CHECK_EVERY: usize = 8;
const STALL_LIMIT: usize = 2000;

fn project<T: Real>(v: &mut CVector<T>) {
    for z in v.iter_mut() {
        *z = ReflectionMode::Absorptive.project(*z);
    }
}

fn inf_norm<T: Real>(v: &CVector<T>) -> T {
    v.iter().fold(T::zero(), |m, z| {
        let a = z.modulus();
        if a > m {
            a
        } else {
            m
        }
    })
}

/// Largest entry of the gradient mapping at `x` for step `1/lip`.
fn gradient_mapping<T: Real>(a: &CMatrix<T>, d: &CVector<T>, x: &CVector<T>, lip: T) -> T {
    let g = a.ad_mul(&(d + a * x));
    let mut p = x - g.unscale(lip);
    project(&mut p);
    inf_norm(&(x - p)) * lip
}

pub fn solve_disk_ls<T: Real>(a: &CMatrix<T>, d: &CVector<T>, opts: &SolverOptions) -> Result<LsSolution<T>> {
    check_ls_dims(a, d)?;
    opts.validate()?;
    let k = a.ncols();
    let zero = Complex::new(T::zero(), T::zero());
    let mut x = CVector::<T>::from_element(k, zero);
    let fx0 = d.norm_squared();
    let mut trace = vec![fx0];

    let scale = inf_norm(&a.ad_mul(d));
    if scale == T::zero() {
        // phi = 0 is stationary for a convex objective.
        return Ok(LsSolution {
            phi: ReflectionVector::unchecked(x, ReflectionMode::Absorptive),
            residual: fx0.sqrt(),
            iterations: 0,
            converged: true,
            trace,
        });
    }
    let floor = T::default_epsilon() * lit(100.0);
    let tol = lit::<T>(opts.tol);
    let target = if tol > floor { tol } else { floor } * scale;

    let mut lip = match opts.step_rule {
        StepRule::FixedSafeStep => gram_lambda_max(a),
        // trace(A^H A)/K never exceeds lambda_max, so it is a safe first guess to grow from.
        StepRule::Backtracking => a.norm_squared() / lit(k as f64),
    };
    if !(lip > T::zero()) {
        return Err(Error::Numerical("disk least squares: A is identically zero".into()));
    }

    let mut fx = fx0;
    let mut stalled = 0;
    let mut y = x.clone();
    let mut t = T::one();
    let two = lit::<T>(2.0);
    let four = lit::<T>(4.0);

    for iter in 1..=opts.max_iters {
        let ry = d + a * &y;
        let g = a.ad_mul(&ry);
        let (z, fz) = loop {
            let mut z = &y - g.unscale(lip);
            project(&mut z);
            let fz = (d + a * &z).norm_squared();
            if opts.step_rule == StepRule::FixedSafeStep {
                break (z, fz);
            }
            let step = &z - &y;
            let model = ry.norm_squared() + two * g.dotc(&step).re + lip * step.norm_squared();
            if fz <= model * (T::one() + lit(1e-12)) {
                break (z, fz);
            }
            lip *= two;
        };

        let t_next = (T::one() + (T::one() + four * t * t).sqrt()) / two;
        if fz < fx {
            stalled = 0;
        } else {
            stalled += 1;
        }
        if fz <= fx {
            let x_prev = std::mem::replace(&mut x, z);
            fx = fz;
            // y = x + (t/t_next)(z - x) + ((t-1)/t_next)(x - x_prev), with z == x here.
            let mom = (t - T::one()) / t_next;
            y = &x + (&x - &x_prev) * Complex::new(mom, T::zero());
            t = t_next;
        } else {
            // Rejected: restart momentum from the incumbent.
            y = x.clone();
            t = T::one();
        }
        trace.push(fx);

        if iter % CHECK_EVERY == 0 || iter == opts.max_iters {
            if fx == T::zero() || stalled >= STALL_LIMIT || gradient_mapping(a, d, &x, lip) <= target {
                return Ok(LsSolution {
                    phi: ReflectionVector::unchecked(x, ReflectionMode::Absorptive),
                    residual: fx.sqrt(),
                    iterations: iter,
                    converged: true,
                    trace,
                });
            }
        }
    }

    Err(Error::NotConverged {
        solver: "disk least squares",
        iterations: opts.max_iters,
        residual: to_f64(fx.sqrt()),
        last_iterate: x.iter().map(|z| (to_f64(z.re), to_f64(z.im))).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    type C = Complex<f64>;

    fn scalar(a: f64, d: f64) -> (CMatrix<f64>, CVector<f64>) {
        (DMatrix::from_element(1, 1, C::new(a, 0.0)), DVector::from_element(1, C::new(d, 0.0)))
    }

    #[test]
    fn partial_absorption_cancels_exactly() {
        let (a, d) = scalar(6.0, 1.0);
        let sol = solve_disk_ls(&a, &d, &SolverOptions::least_squares()).unwrap();
        assert!((sol.phi.coeffs()[0] - C::new(-1.0 / 6.0, 0.0)).norm() < 1e-12);
        assert!(sol.residual < 1e-12);
    }

    #[test]
    fn strong_direct_path_saturates_modulus() {
        let (a, d) = scalar(2.0, 10.0);
        let sol = solve_disk_ls(&a, &d, &SolverOptions::least_squares()).unwrap();
        assert!((sol.phi.coeffs()[0] - C::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((sol.residual - 8.0).abs() < 1e-12);
    }

    #[test]
    fn zero_target_gives_zero() {
        let a = DMatrix::from_fn(4, 3, |i, j| C::new(i as f64 - j as f64, 1.0));
        let d = DVector::from_element(4, C::new(0.0, 0.0));
        let sol = solve_disk_ls(&a, &d, &SolverOptions::least_squares()).unwrap();
        assert_eq!(sol.residual, 0.0);
        assert!(sol.phi.coeffs().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn backtracking_reaches_same_answer() {
        let a = DMatrix::from_fn(5, 3, |i, j| C::new((i * 3 + j) as f64 * 0.37 % 1.0 - 0.5, (i + 2 * j) as f64 * 0.61 % 1.0 - 0.5));
        let d = DVector::from_fn(5, |i, _| C::new(0.3 * i as f64 - 0.6, 0.2));
        let fixed = solve_disk_ls(&a, &d, &SolverOptions::least_squares()).unwrap();
        let bt = SolverOptions { step_rule: StepRule::Backtracking, ..SolverOptions::least_squares() };
        let back = solve_disk_ls(&a, &d, &bt).unwrap();
        assert!((fixed.residual - back.residual).abs() < 1e-7);
        assert!(back.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = DMatrix::from_element(3, 2, C::new(1.0, 0.0));
        let d = DVector::from_element(2, C::new(1.0, 0.0));
        assert!(matches!(solve_disk_ls(&a, &d, &SolverOptions::least_squares()), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn iteration_budget_exhaustion_returns_last_iterate() {
        let a = DMatrix::from_fn(6, 4, |i, j| C::new(((i + 1) * (j + 2)) as f64 % 1.7, (i as f64 - j as f64) * 0.1));
        let d = DVector::from_fn(6, |i, _| C::new(1.0 + i as f64, -0.5));
        let opts = SolverOptions::least_squares().with_max_iters(2).with_tol(1e-30);
        match solve_disk_ls(&a, &d, &opts) {
            Err(Error::NotConverged { last_iterate, residual, .. }) => {
                assert_eq!(last_iterate.len(), 4);
                assert!(residual.is_finite());
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }
}
