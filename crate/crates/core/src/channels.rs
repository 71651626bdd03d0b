//! Stochastic channel synthesis.
//!
//! Every generator is a pure function of its parameters and an [`RngSeed`].
//! Random streams come from ChaCha8 (`rand_chacha`) seeded through
//! `SeedableRng::seed_from_u64`, so draws are bit-identical across runs and
//! platforms. Complex Gaussians use the ziggurat sampler of `rand_distr`.

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{steering_vector, CMatrix, CVector};
use crate::scalar::{lit, Real};

/// 64-bit seed of a random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Child seed for a sub-stream: `seed XOR mix(indices)`.
    ///
    /// The index tuple is hashed with SplitMix64 so that neighbouring
    /// `(sweep, trial)` pairs land on unrelated streams.
    pub fn derive(self, indices: &[u64]) -> RngSeed {
        let mut h = 0x243f_6a88_85a3_08d3u64;
        for &i in indices {
            h = splitmix64(h ^ splitmix64(i.wrapping_add(0x9e37_79b9_7f4a_7c15)));
        }
        RngSeed(self.0 ^ h)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One draw of `CN(0, variance)`: real and imaginary parts each `N(0, variance/2)`.
pub fn sample_cn<T: Real, R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex<T> {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(lit(re * s), lit(im * s))
}

fn check_variance(variance: f64) -> Result<()> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::InvalidArgument(format!("variance must be positive, got {variance}")));
    }
    Ok(())
}

/// i.i.d. Rayleigh-fading matrix with per-entry variance `variance`.
pub fn rayleigh_matrix<T: Real>(rows: usize, cols: usize, variance: f64, seed: RngSeed) -> Result<CMatrix<T>> {
    rayleigh_matrix_from(&mut seed.rng(), rows, cols, variance)
}

/// [`rayleigh_matrix`] drawing from an existing stream (entries in column-major order).
pub fn rayleigh_matrix_from<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    variance: f64,
) -> Result<CMatrix<T>> {
    if rows == 0 || cols == 0 {
        return Err(Error::dims("Rayleigh matrix", "positive dimensions", format!("{rows}x{cols}")));
    }
    check_variance(variance)?;
    Ok(DMatrix::from_fn(rows, cols, |_, _| sample_cn(rng, variance)))
}

/// i.i.d. Rayleigh-fading vector.
pub fn rayleigh_vector_from<T: Real, R: Rng + ?Sized>(rng: &mut R, len: usize, variance: f64) -> Result<CVector<T>> {
    if len == 0 {
        return Err(Error::dims("Rayleigh vector", "positive length", 0));
    }
    check_variance(variance)?;
    Ok(DVector::from_fn(len, |_, _| sample_cn(rng, variance)))
}

/// Parameters of the clustered millimetre-wave channel for one link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmwParams {
    /// Number of angular clusters `T`.
    pub clusters: usize,
    /// Sub-paths per cluster `J`.
    pub subpaths: usize,
    /// Linear variance of each path gain.
    pub variance: f64,
    /// Predefined angle-of-arrival centre (radians).
    pub aoa_center: f64,
    /// Predefined angle-of-departure centre (radians).
    pub aod_center: f64,
    /// Half-width of the cluster-centre distribution (radians).
    pub cluster_spread: f64,
    /// Half-width of the sub-path distribution around its cluster centre (radians).
    pub subpath_spread: f64,
}

impl MmwParams {
    /// Link with the default spreads (60 deg clusters, 2 deg sub-paths); the
    /// arrival centre sits opposite the departure centre (`+180 deg`).
    pub fn new(clusters: usize, subpaths: usize, variance: f64, aod_center_deg: f64) -> Self {
        Self {
            clusters,
            subpaths,
            variance,
            aoa_center: (aod_center_deg + 180.0).to_radians(),
            aod_center: aod_center_deg.to_radians(),
            cluster_spread: 60f64.to_radians(),
            subpath_spread: 2f64.to_radians(),
        }
    }

    /// Base station to radar receiver (`D`).
    pub fn tx_to_rx(clusters: usize, subpaths: usize, variance: f64) -> Self {
        Self::new(clusters, subpaths, variance, 15.0)
    }

    /// Base station to surface (`G`).
    pub fn tx_to_ris(clusters: usize, subpaths: usize, variance: f64) -> Self {
        Self::new(clusters, subpaths, variance, 30.0)
    }

    /// Surface to radar receiver (`H`).
    pub fn ris_to_rx(clusters: usize, subpaths: usize, variance: f64) -> Self {
        Self::new(clusters, subpaths, variance, -15.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.clusters == 0 || self.subpaths == 0 {
            return Err(Error::InvalidArgument("mmWave channel needs at least one cluster and sub-path".into()));
        }
        if !(self.cluster_spread >= 0.0 && self.subpath_spread >= 0.0) {
            return Err(Error::InvalidArgument("angular spreads must be non-negative".into()));
        }
        if !(self.aoa_center.is_finite() && self.aod_center.is_finite()) {
            return Err(Error::InvalidArgument("angle centres must be finite".into()));
        }
        check_variance(self.variance)
    }
}

fn uniform_around<R: Rng + ?Sized>(rng: &mut R, center: f64, half_width: f64) -> f64 {
    let u: f64 = rng.random();
    center + half_width * (2.0 * u - 1.0)
}

/// Clustered mmWave matrix `sqrt(rx tx) sum_t sum_l alpha a_rx(aoa) a_tx(aod)^T`.
pub fn mmw_matrix<T: Real>(rx_elems: usize, tx_elems: usize, params: &MmwParams, seed: RngSeed) -> Result<CMatrix<T>> {
    mmw_matrix_from(&mut seed.rng(), rx_elems, tx_elems, params)
}

/// [`mmw_matrix`] drawing from an existing stream.
pub fn mmw_matrix_from<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    rx_elems: usize,
    tx_elems: usize,
    params: &MmwParams,
) -> Result<CMatrix<T>> {
    if rx_elems == 0 || tx_elems == 0 {
        return Err(Error::dims("mmWave matrix", "positive array sizes", format!("{rx_elems}x{tx_elems}")));
    }
    params.validate()?;
    let gain: T = lit(((rx_elems * tx_elems) as f64).sqrt());
    let mut out = DMatrix::from_element(rx_elems, tx_elems, Complex::new(T::zero(), T::zero()));
    for _ in 0..params.clusters {
        let aoa_c = uniform_around(rng, params.aoa_center, params.cluster_spread);
        let aod_c = uniform_around(rng, params.aod_center, params.cluster_spread);
        for _ in 0..params.subpaths {
            let aoa = uniform_around(rng, aoa_c, params.subpath_spread);
            let aod = uniform_around(rng, aod_c, params.subpath_spread);
            let alpha: Complex<T> = sample_cn(rng, params.variance);
            let a_rx = steering_vector::<T>(rx_elems, lit(aoa));
            let a_tx = steering_vector::<T>(tx_elems, lit(aod));
            out.ger(alpha * Complex::new(gain, T::zero()), &a_rx, &a_tx, Complex::new(T::one(), T::zero()));
        }
    }
    Ok(out)
}
