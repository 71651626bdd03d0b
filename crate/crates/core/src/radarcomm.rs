//! Radar/communication coexistence: choose the surface so that the
//! interference channel `D + H diag(phi) G` from a communication base station
//! to a radar receiver has the smallest Frobenius norm.

use nalgebra::DMatrix;
use rand::Rng;

use crate::channels::{mmw_matrix_from, rayleigh_matrix_from, MmwParams, RngSeed};
use crate::error::{Error, Result};
use crate::linalg::{check_matrix, db_to_linear, make_diag_channel, CMatrix, CVector};
use crate::reflection::{ReflectionMode, ReflectionVector};
use crate::scalar::{lit, Real};
use crate::solvers::{solve_disk_ls, solve_unit_modulus_gp, SolverOptions};

/// Channels of one coexistence scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarCommInstance<T: Real = f64> {
    /// Base station to radar, `N x M`.
    pub direct: CMatrix<T>,
    /// Base station to surface, `K x M`.
    pub to_ris: CMatrix<T>,
    /// Surface to radar, `N x K`.
    pub from_ris: CMatrix<T>,
}

impl<T: Real> RadarCommInstance<T> {
    pub fn new(direct: CMatrix<T>, to_ris: CMatrix<T>, from_ris: CMatrix<T>) -> Result<Self> {
        check_matrix("D", &direct)?;
        check_matrix("G", &to_ris)?;
        check_matrix("H", &from_ris)?;
        if to_ris.ncols() != direct.ncols() {
            return Err(Error::dims("G (columns)", direct.ncols(), to_ris.ncols()));
        }
        if from_ris.nrows() != direct.nrows() {
            return Err(Error::dims("H (rows)", direct.nrows(), from_ris.nrows()));
        }
        if from_ris.ncols() != to_ris.nrows() {
            return Err(Error::dims("H (columns)", to_ris.nrows(), from_ris.ncols()));
        }
        Ok(Self { direct, to_ris, from_ris })
    }

    /// Number of surface elements `K`.
    pub fn elements(&self) -> usize {
        self.to_ris.nrows()
    }

    /// `D + H diag(phi) G`.
    pub fn effective_channel(&self, phi: &ReflectionVector<T>) -> Result<CMatrix<T>> {
        Ok(&self.direct + make_diag_channel(phi, &self.from_ris, &self.to_ris)?)
    }

    /// `||D + H diag(phi) G||_F`.
    pub fn residual(&self, phi: &ReflectionVector<T>) -> Result<T> {
        Ok(self.effective_channel(phi)?.norm())
    }

    /// Keeps the first `k` surface elements.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.elements() {
            return Err(Error::InvalidArgument(format!("cannot keep {k} of {} elements", self.elements())));
        }
        Self::new(
            self.direct.clone(),
            self.to_ris.rows(0, k).into_owned(),
            self.from_ris.columns(0, k).into_owned(),
        )
    }
}

/// Variances in dB of the three links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkStrengths {
    pub direct_db: f64,
    pub to_ris_db: f64,
    pub from_ris_db: f64,
}

/// i.i.d. Rayleigh scenario with `N` radar antennas, `M` base-station antennas
/// and `K` elements. Draw order: `D`, `G`, `H`.
pub fn rayleigh_instance<T: Real>(n: usize, m: usize, k: usize, strengths: LinkStrengths, seed: RngSeed) -> Result<RadarCommInstance<T>> {
    let mut rng = seed.rng();
    rayleigh_instance_from(&mut rng, n, m, k, strengths)
}

pub fn rayleigh_instance_from<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m: usize,
    k: usize,
    strengths: LinkStrengths,
) -> Result<RadarCommInstance<T>> {
    let d = rayleigh_matrix_from(rng, n, m, db_to_linear(strengths.direct_db))?;
    let g = rayleigh_matrix_from(rng, k, m, db_to_linear(strengths.to_ris_db))?;
    let h = rayleigh_matrix_from(rng, n, k, db_to_linear(strengths.from_ris_db))?;
    RadarCommInstance::new(d, g, h)
}

/// Clustered mmWave scenario with `clusters` clusters of `subpaths` paths per link.
pub fn mmwave_instance<T: Real>(
    n: usize,
    m: usize,
    k: usize,
    clusters: usize,
    subpaths: usize,
    strengths: LinkStrengths,
    seed: RngSeed,
) -> Result<RadarCommInstance<T>> {
    let mut rng = seed.rng();
    let d = mmw_matrix_from(&mut rng, n, m, &MmwParams::tx_to_rx(clusters, subpaths, db_to_linear(strengths.direct_db)))?;
    let g = mmw_matrix_from(&mut rng, k, m, &MmwParams::tx_to_ris(clusters, subpaths, db_to_linear(strengths.to_ris_db)))?;
    let h = mmw_matrix_from(&mut rng, n, k, &MmwParams::ris_to_rx(clusters, subpaths, db_to_linear(strengths.from_ris_db)))?;
    RadarCommInstance::new(d, g, h)
}

/// `(A, d)` with `A(:,k) = vec(H(:,k) G(k,:))` and `d = vec(D)`, so that
/// `||d + A phi||_2 = ||D + H diag(phi) G||_F`.
pub fn build_ls_system<T: Real>(inst: &RadarCommInstance<T>) -> (CMatrix<T>, CVector<T>) {
    let (n, m) = inst.direct.shape();
    let k = inst.elements();
    let mut a = DMatrix::zeros(n * m, k);
    for kk in 0..k {
        let y = inst.from_ris.column(kk) * inst.to_ris.row(kk);
        a.column_mut(kk).copy_from_slice(y.as_slice());
    }
    let d = CVector::from_column_slice(inst.direct.as_slice());
    (a, d)
}

#[derive(Debug, Clone)]
pub struct RadarCommDesign<T: Real = f64> {
    pub phi: ReflectionVector<T>,
    /// `||D + H diag(phi) G||_F` evaluated from the matrices.
    pub residual: T,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Real> RadarCommDesign<T> {
    /// Residual in dB, `20 log10(residual)`.
    pub fn residual_db(&self) -> T {
        lit::<T>(20.0) * self.residual.log10()
    }
}

/// Optimal absorptive design (convex).
pub fn design_aris<T: Real>(inst: &RadarCommInstance<T>, opts: &SolverOptions) -> Result<RadarCommDesign<T>> {
    let (a, d) = build_ls_system(inst);
    let sol = solve_disk_ls(&a, &d, opts)?;
    let residual = inst.residual(&sol.phi)?;
    Ok(RadarCommDesign { phi: sol.phi, residual, iterations: sol.iterations, converged: sol.converged })
}

/// Phase-only design by gradient projection.
pub fn design_conventional<T: Real>(inst: &RadarCommInstance<T>, opts: &SolverOptions) -> Result<RadarCommDesign<T>> {
    let (a, d) = build_ls_system(inst);
    let sol = solve_unit_modulus_gp(&a, &d, opts)?;
    let residual = inst.residual(&sol.phi)?;
    Ok(RadarCommDesign { phi: sol.phi, residual, iterations: sol.iterations, converged: sol.converged })
}

pub fn design<T: Real>(inst: &RadarCommInstance<T>, mode: ReflectionMode, opts: &SolverOptions) -> Result<RadarCommDesign<T>> {
    match mode {
        ReflectionMode::Absorptive => design_aris(inst, opts),
        ReflectionMode::Conventional => design_conventional(inst, opts),
    }
}

/// Average modulus of the coefficients.
pub fn mean_modulus<T: Real>(phi: &ReflectionVector<T>) -> T {
    phi.mean_modulus()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Complex, DVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::quadratic::random_feasible;

    type C = Complex<f64>;

    fn scalar_instance(d: C, g: C, h: C) -> RadarCommInstance<f64> {
        RadarCommInstance::new(
            DMatrix::from_element(1, 1, d),
            DMatrix::from_element(1, 1, g),
            DMatrix::from_element(1, 1, h),
        )
        .unwrap()
    }

    const UNIT: LinkStrengths = LinkStrengths { direct_db: 0.0, to_ris_db: 0.0, from_ris_db: 0.0 };

    #[test]
    fn scalar_system() {
        let inst = scalar_instance(C::new(5.0, 0.0), C::new(3.0, 0.0), C::new(2.0, 0.0));
        let (a, d) = build_ls_system(&inst);
        assert_eq!(a[(0, 0)], C::new(6.0, 0.0));
        assert_eq!(d[0], C::new(5.0, 0.0));
    }

    #[test]
    fn system_columns_are_outer_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inst: RadarCommInstance = rayleigh_instance_from(&mut rng, 2, 3, 2, UNIT).unwrap();
        let (a, _) = build_ls_system(&inst);
        for k in 0..2 {
            let y = inst.from_ris.column(k) * inst.to_ris.row(k);
            for (i, z) in y.as_slice().iter().enumerate() {
                assert_eq!(a[(i, k)], *z);
            }
        }
    }

    #[test]
    fn system_matches_frobenius_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let inst: RadarCommInstance = rayleigh_instance_from(&mut rng, 3, 3, 4, UNIT).unwrap();
        let (a, d) = build_ls_system(&inst);
        for _ in 0..100 {
            let phi = random_feasible(&mut rng, 4, ReflectionMode::Absorptive);
            let ls = (&d + &a * phi.coeffs()).norm();
            let direct = inst.residual(&phi).unwrap();
            assert!((ls - direct).abs() <= 1e-12 * direct.max(1.0));
        }
    }

    #[test]
    fn single_element_designs() {
        let inst = scalar_instance(C::new(1.0, 0.5), C::new(2.0, -1.0), C::new(0.5, 1.5));
        let gh = (C::new(2.0, -1.0) * C::new(0.5, 1.5)).norm();
        let dn = C::new(1.0, 0.5).norm();
        let aris = design_aris(&inst, &SolverOptions::least_squares()).unwrap();
        assert!(aris.residual < 1e-9);
        assert!((aris.phi.coeffs()[0].norm() - dn / gh).abs() < 1e-9);
        let conv = design_conventional(&inst, &SolverOptions::least_squares()).unwrap();
        assert!((conv.residual - (dn - gh).abs()).abs() < 1e-9);
    }

    #[test]
    fn constructed_cancellation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let inst: RadarCommInstance = rayleigh_instance_from(&mut rng, 3, 2, 3, UNIT).unwrap();
        let ones = ReflectionVector::ones(3, ReflectionMode::Absorptive);
        let direct = -make_diag_channel(&ones, &inst.from_ris, &inst.to_ris).unwrap();
        let inst = RadarCommInstance::new(direct, inst.to_ris, inst.from_ris).unwrap();
        let aris = design_aris(&inst, &SolverOptions::least_squares()).unwrap();
        assert!(aris.residual < 1e-6, "{}", aris.residual);
    }

    #[test]
    fn single_element_phase_is_opposite() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let inst: RadarCommInstance = rayleigh_instance_from(&mut rng, 1, 1, 1, UNIT).unwrap();
            let conv = design_conventional(&inst, &SolverOptions::least_squares()).unwrap();
            let expected = inst.direct[(0, 0)].arg() - (inst.to_ris[(0, 0)] * inst.from_ris[(0, 0)]).arg() + std::f64::consts::PI;
            let diff = C::from_polar(1.0, expected) - conv.phi.coeffs()[0];
            assert!(diff.norm() < 1e-9);
        }
    }

    #[test]
    fn mean_modulus_examples() {
        assert_eq!(mean_modulus(&ReflectionVector::<f64>::zeros(3)), 0.0);
        let v = ReflectionVector::new(DVector::from_vec(vec![C::new(0.5, 0.0), C::new(0.0, 1.0)]), ReflectionMode::Absorptive).unwrap();
        assert!((mean_modulus(&v) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn instance_rejects_inconsistent_shapes() {
        let d = DMatrix::from_element(2, 2, C::new(1.0, 0.0));
        let g = DMatrix::from_element(3, 2, C::new(1.0, 0.0));
        let h = DMatrix::from_element(2, 4, C::new(1.0, 0.0));
        assert!(matches!(RadarCommInstance::new(d, g, h), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn single_precision_pipeline() {
        let inst: RadarCommInstance<f32> = rayleigh_instance(2, 2, 3, UNIT, RngSeed(4)).unwrap();
        let opts = SolverOptions::least_squares().with_tol(1e-5);
        let aris = design_aris(&inst, &opts).unwrap();
        let conv = design_conventional(&inst, &opts).unwrap();
        assert!(aris.residual <= conv.residual + 1e-4);
    }
}
