//! The reflection coefficients `phi(k) = rho_k exp(j theta_k)` of a surface.

use std::fmt;

use nalgebra::{Complex, ComplexField, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{unit_phasor, CMatrix, CVector};
use crate::scalar::{lit, to_f64, Real};

/// Feasible set of a single reflection coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReflectionMode {
    /// `|phi(k)| <= 1`: phase and modulus are both adjustable.
    #[serde(rename = "aris", alias = "absorptive")]
    Absorptive,
    /// `|phi(k)| = 1`: phase-only surface.
    Conventional,
}

impl ReflectionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ReflectionMode::Absorptive => "aris",
            ReflectionMode::Conventional => "conventional",
        }
    }

    /// Nearest feasible coefficient.
    #[inline]
    pub fn project<T: Real>(self, z: Complex<T>) -> Complex<T> {
        match self {
            ReflectionMode::Absorptive => {
                let m = z.modulus();
                if m > T::one() {
                    z.unscale(m)
                } else {
                    z
                }
            }
            ReflectionMode::Conventional => unit_phasor(z),
        }
    }

    fn admits(self, modulus: f64) -> bool {
        const TOL: f64 = 1e-9;
        match self {
            ReflectionMode::Absorptive => modulus <= 1.0 + TOL,
            ReflectionMode::Conventional => (modulus - 1.0).abs() <= TOL,
        }
    }
}

impl fmt::Display for ReflectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The `K` complex coefficients of a surface, validated against their mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionVector<T = f64> {
    coeffs: DVector<Complex<T>>,
    mode: ReflectionMode,
}

impl<T: Real> ReflectionVector<T> {
    /// Validates `coeffs` against `mode` (tolerance `1e-9` on the modulus).
    pub fn new(coeffs: CVector<T>, mode: ReflectionMode) -> Result<Self> {
        for (index, z) in coeffs.iter().enumerate() {
            let modulus = to_f64(z.modulus());
            if !modulus.is_finite() || !mode.admits(modulus) {
                return Err(Error::InfeasibleCoefficient {
                    index,
                    modulus,
                    mode: mode.as_str(),
                });
            }
        }
        Ok(Self { coeffs, mode })
    }

    pub(crate) fn unchecked(coeffs: CVector<T>, mode: ReflectionMode) -> Self {
        Self { coeffs, mode }
    }

    /// Projects arbitrary complex values onto the feasible set of `mode`.
    pub fn projected(mut coeffs: CVector<T>, mode: ReflectionMode) -> Self {
        for z in coeffs.iter_mut() {
            *z = mode.project(*z);
        }
        Self { coeffs, mode }
    }

    /// Builds `rho_k exp(j theta_k)`.
    pub fn from_polar(rho: &[T], theta: &[T], mode: ReflectionMode) -> Result<Self> {
        if rho.len() != theta.len() {
            return Err(Error::dims("theta", rho.len(), theta.len()));
        }
        let coeffs = DVector::from_iterator(
            rho.len(),
            rho.iter().zip(theta).map(|(&r, &t)| Complex::new(r * t.cos(), r * t.sin())),
        );
        Self::new(coeffs, mode)
    }

    /// Fully absorbing surface (the surface is "off").
    pub fn zeros(k: usize) -> Self {
        Self {
            coeffs: DVector::from_element(k, Complex::new(T::zero(), T::zero())),
            mode: ReflectionMode::Absorptive,
        }
    }

    /// All coefficients equal to one.
    pub fn ones(k: usize, mode: ReflectionMode) -> Self {
        Self {
            coeffs: DVector::from_element(k, Complex::new(T::one(), T::zero())),
            mode,
        }
    }

    pub fn coeffs(&self) -> &CVector<T> {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> CVector<T> {
        self.coeffs
    }

    pub fn mode(&self) -> ReflectionMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn moduli(&self) -> Vec<T> {
        self.coeffs.iter().map(|z| z.modulus()).collect()
    }

    pub fn phases(&self) -> Vec<T> {
        self.coeffs.iter().map(|z| z.argument()).collect()
    }

    /// Mean of `rho_k`, in `[0, 1]`.
    pub fn mean_modulus(&self) -> T {
        if self.coeffs.is_empty() {
            return T::zero();
        }
        let sum = self.coeffs.iter().fold(T::zero(), |acc, z| acc + z.modulus());
        sum / lit(self.coeffs.len() as f64)
    }

    /// `[phi^T 1]^T`, the homogenised vector of length `K + 1`.
    pub fn augmented(&self) -> CVector<T> {
        let k = self.coeffs.len();
        DVector::from_fn(k + 1, |i, _| {
            if i < k {
                self.coeffs[i]
            } else {
                Complex::new(T::one(), T::zero())
            }
        })
    }

    /// `diag(phi)` as a dense matrix.
    pub fn diag(&self) -> CMatrix<T> {
        DMatrix::from_diagonal(&self.coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type C = Complex<f64>;

    #[test]
    fn mean_modulus_examples() {
        assert_eq!(ReflectionVector::<f64>::zeros(4).mean_modulus(), 0.0);
        assert_eq!(ReflectionVector::<f64>::ones(4, ReflectionMode::Conventional).mean_modulus(), 1.0);
        let v = ReflectionVector::new(DVector::from_vec(vec![C::new(0.0, 0.5), C::new(-1.0, 0.0)]), ReflectionMode::Absorptive).unwrap();
        assert!((v.mean_modulus() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn augmented_appends_one() {
        let v = ReflectionVector::new(DVector::from_vec(vec![C::new(0.3, 0.1)]), ReflectionMode::Absorptive).unwrap();
        let a = v.augmented();
        assert_eq!(a.len(), 2);
        assert_eq!(a[1], C::new(1.0, 0.0));
    }

    #[test]
    fn projection_rules() {
        let a = ReflectionMode::Absorptive.project(C::new(3.0, 4.0));
        assert!((a - C::new(0.6, 0.8)).norm() < 1e-15);
        assert_eq!(ReflectionMode::Absorptive.project(C::new(0.1, 0.2)), C::new(0.1, 0.2));
        let c = ReflectionMode::Conventional.project(C::new(0.1, 0.0));
        assert_eq!(c, C::new(1.0, 0.0));
        assert_eq!(ReflectionMode::Conventional.project(C::new(0.0, 0.0)), C::new(1.0, 0.0));
    }

    #[test]
    fn from_polar_checks_lengths_and_bounds() {
        assert!(ReflectionVector::from_polar(&[0.5, 1.0], &[0.0], ReflectionMode::Absorptive).is_err());
        assert!(ReflectionVector::from_polar(&[0.5], &[1.0], ReflectionMode::Conventional).is_err());
        let v = ReflectionVector::from_polar(&[1.0, 1.0], &[0.2, -1.0], ReflectionMode::Conventional).unwrap();
        assert_eq!(v.len(), 2);
    }

    proptest! {
        #[test]
        fn absorptive_rejects_moduli_above_one(m in 1.0f64 + 1e-6..10.0, theta in -3.2f64..3.2, pos in 0usize..5) {
            let mut coeffs = DVector::from_element(5, C::new(0.5, 0.0));
            coeffs[pos] = C::from_polar(m, theta);
            let err = ReflectionVector::new(coeffs, ReflectionMode::Absorptive).unwrap_err();
            match err {
                Error::InfeasibleCoefficient { index, .. } => prop_assert_eq!(index, pos),
                other => prop_assert!(false, "unexpected {other:?}"),
            }
        }

        #[test]
        fn conventional_rejects_non_unit_moduli(m in 0.0f64..0.999_999, theta in -3.2f64..3.2, pos in 0usize..5) {
            let mut coeffs = DVector::from_element(5, C::new(0.0, 1.0));
            coeffs[pos] = C::from_polar(m, theta);
            prop_assert!(ReflectionVector::new(coeffs, ReflectionMode::Conventional).is_err());
        }

        #[test]
        fn projected_vectors_are_feasible(re in proptest::collection::vec(-5.0f64..5.0, 1..10), seed in 0.0f64..1.0) {
            let coeffs = DVector::from_iterator(re.len(), re.iter().map(|&x| C::new(x, seed * x - 0.3)));
            for mode in [ReflectionMode::Absorptive, ReflectionMode::Conventional] {
                let v = ReflectionVector::projected(coeffs.clone(), mode);
                prop_assert!(ReflectionVector::new(v.coeffs().clone(), mode).is_ok());
            }
        }
    }
}
