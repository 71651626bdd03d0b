//! Homogenised quadratic forms over `phi_bar = [phi; 1]`, the relaxed
//! decision matrix and Gaussian randomization back to a rank-one design.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;

use crate::channels::{sample_cn, RngSeed};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_part, re_trace_product, unit_phasor, CMatrix, CVector};
use crate::reflection::{ReflectionMode, ReflectionVector};

type C64 = Complex<f64>;

/// Rank-one PSD matrix `F = u u^H` with `phi_bar^H F phi_bar = |c^T phi + d|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizedQuadratic {
    u: CVector<f64>,
}

impl HomogenizedQuadratic {
    /// Quadratic of the scalar channel `sum_k cascade(k) phi(k) + direct`.
    pub fn from_cascade(cascade: &CVector<f64>, direct: C64) -> Self {
        let k = cascade.len();
        let u = DVector::from_fn(k + 1, |i, _| if i < k { cascade[i].conj() } else { direct.conj() });
        Self { u }
    }

    pub fn zero(k: usize) -> Self {
        Self { u: DVector::zeros(k + 1) }
    }

    /// Number of surface elements `K`.
    pub fn elements(&self) -> usize {
        self.u.len() - 1
    }

    /// The factor `u`.
    pub fn factor(&self) -> &CVector<f64> {
        &self.u
    }

    pub fn matrix(&self) -> CMatrix<f64> {
        &self.u * self.u.adjoint()
    }

    /// `|c^T phi + d|^2`.
    pub fn eval(&self, phi: &ReflectionVector<f64>) -> f64 {
        self.eval_coeffs(phi.coeffs())
    }

    pub fn eval_coeffs(&self, phi: &CVector<f64>) -> f64 {
        let k = self.elements();
        debug_assert_eq!(phi.len(), k);
        let mut acc = self.u[k].conj();
        for i in 0..k {
            acc += self.u[i].conj() * phi[i];
        }
        acc.norm_sqr()
    }

    /// `tr(X F) = u^H X u`.
    pub fn trace_with(&self, x: &CMatrix<f64>) -> f64 {
        self.u.dotc(&(x * &self.u)).re
    }
}

/// Relaxed decision matrix: Hermitian PSD of size `K + 1` with bounded
/// diagonal and unit last diagonal entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SdrMatrix {
    m: CMatrix<f64>,
}

impl SdrMatrix {
    /// Validates Hermitian symmetry, positive semidefiniteness (relative
    /// `1e-7`), `X(k,k) <= 1` and `X(K+1,K+1) = 1` (both within `1e-6`).
    pub fn new(m: CMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n < 1 || m.ncols() != n {
            return Err(Error::dims("SDR matrix", "square and non-empty", format!("{}x{}", n, m.ncols())));
        }
        let scale = m.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        if !scale.is_finite() {
            return Err(Error::InvalidArgument("SDR matrix has non-finite entries".into()));
        }
        let herm = hermitian_part(&m);
        if (&herm - &m).iter().any(|z| z.norm() > 1e-9 * scale.max(1.0)) {
            return Err(Error::InvalidArgument("SDR matrix is not Hermitian".into()));
        }
        let eig = herm.clone().symmetric_eigenvalues();
        let lmax = eig.iter().copied().fold(0.0f64, f64::max);
        if eig.iter().any(|&l| l < -1e-7 * lmax.max(1.0)) {
            return Err(Error::InvalidArgument("SDR matrix is not positive semidefinite".into()));
        }
        for k in 0..n - 1 {
            if herm[(k, k)].re > 1.0 + 1e-6 {
                return Err(Error::InvalidArgument(format!("SDR diagonal entry {k} exceeds one")));
            }
        }
        if (herm[(n - 1, n - 1)].re - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument("SDR corner entry must equal one".into()));
        }
        Ok(Self { m: herm })
    }

    pub(crate) fn from_solver(m: CMatrix<f64>) -> Self {
        Self { m }
    }

    /// `phi_bar phi_bar^H`.
    pub fn rank_one(phi: &ReflectionVector<f64>) -> Self {
        let a = phi.augmented();
        Self { m: &a * a.adjoint() }
    }

    /// Surface switched off: `diag(0, ..., 0, 1)`.
    pub fn ris_off(k: usize) -> Self {
        let mut m = DMatrix::zeros(k + 1, k + 1);
        m[(k, k)] = C64::new(1.0, 0.0);
        Self { m }
    }

    /// Identity of size `K + 1`, feasible for both modes.
    pub fn identity(k: usize) -> Self {
        Self { m: DMatrix::identity(k + 1, k + 1) }
    }

    pub fn as_matrix(&self) -> &CMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix<f64> {
        self.m
    }

    /// Size `K + 1`.
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn trace_with(&self, q: &HomogenizedQuadratic) -> f64 {
        q.trace_with(&self.m)
    }

    pub fn trace_product(&self, other: &CMatrix<f64>) -> f64 {
        re_trace_product(&self.m, other)
    }

    /// Ratio of the second largest to the largest eigenvalue.
    pub fn rank_one_gap(&self) -> f64 {
        let mut eig: Vec<f64> = self.m.clone().symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        if eig.len() < 2 || eig[0] <= 0.0 {
            return 0.0;
        }
        eig[1].max(0.0) / eig[0]
    }
}

const RESAMPLE_LIMIT: usize = 16;

/// Draws rank-one candidates from `CN(0, X)`, normalised by their last entry
/// and projected onto the feasible set of `mode`.
///
/// The leading candidate is the scaled principal eigenvector of `X`; the next
/// `trials` candidates are Gaussian draws, generated in sequence from `seed`
/// so that a larger `trials` extends a smaller one.
pub fn gaussian_candidates(x: &SdrMatrix, mode: ReflectionMode, trials: usize, seed: RngSeed) -> Vec<ReflectionVector<f64>> {
    let n = x.dim();
    let k = n - 1;
    let eig = x.as_matrix().clone().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    let sqrt_vals: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| if l > 1e-14 * lmax { l.sqrt() } else { 0.0 })
        .collect();
    let mut factor = eig.eigenvectors.clone();
    for (j, mut col) in factor.column_iter_mut().enumerate() {
        col *= C64::new(sqrt_vals[j], 0.0);
    }

    let finish = |xi: CVector<f64>| -> Option<ReflectionVector<f64>> {
        let last = xi[k];
        if last.norm() <= 1e-12 * xi.norm().max(f64::MIN_POSITIVE) {
            return None;
        }
        let coeffs = DVector::from_fn(k, |i, _| xi[i] / last);
        let coeffs = match mode {
            ReflectionMode::Absorptive => coeffs.map(|z| if z.norm() > 1.0 { unit_phasor(z) } else { z }),
            ReflectionMode::Conventional => coeffs.map(unit_phasor),
        };
        Some(ReflectionVector::projected(coeffs, mode))
    };

    let mut out = Vec::with_capacity(trials + 1);
    let imax = eig.eigenvalues.imax();
    if let Some(c) = finish(factor.column(imax).into_owned()) {
        out.push(c);
    }
    let mut rng = seed.rng();
    for _ in 0..trials {
        for _ in 0..RESAMPLE_LIMIT {
            let w = DVector::from_fn(n, |_, _| sample_cn::<f64, _>(&mut rng, 1.0));
            if let Some(c) = finish(&factor * w) {
                out.push(c);
                break;
            }
        }
    }
    if out.is_empty() {
        out.push(match mode {
            ReflectionMode::Absorptive => ReflectionVector::zeros(k),
            ReflectionMode::Conventional => ReflectionVector::ones(k, mode),
        });
    }
    out
}

/// The candidate maximising `metric`; ties keep the earliest.
pub fn best_candidate<F>(candidates: Vec<ReflectionVector<f64>>, metric: F) -> (ReflectionVector<f64>, f64)
where
    F: Fn(&ReflectionVector<f64>) -> f64,
{
    let mut best: Option<(ReflectionVector<f64>, f64)> = None;
    for c in candidates {
        let v = metric(&c);
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((c, v));
        }
    }
    best.expect("at least one candidate")
}

/// Uniform random draw from the feasible set, used by oracles and tests.
pub fn random_feasible<R: Rng + ?Sized>(rng: &mut R, k: usize, mode: ReflectionMode) -> ReflectionVector<f64> {
    let coeffs = DVector::from_fn(k, |_, _| {
        let rho: f64 = match mode {
            ReflectionMode::Absorptive => rng.random(),
            ReflectionMode::Conventional => 1.0,
        };
        let theta: f64 = rng.random::<f64>() * std::f64::consts::TAU;
        Complex::from_polar(rho, theta)
    });
    ReflectionVector::projected(coeffs, mode)
}
