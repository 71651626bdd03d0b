//! Complex dense linear-algebra helpers: cascade channels, vectorization,
//! steering vectors and a few conversions used throughout the crate.

use nalgebra::{Complex, ComplexField, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::reflection::ReflectionVector;
use crate::scalar::{lit, Real};

pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

/// Cascade channel `H diag(phi) G = sum_k phi(k) H(:,k) G(k,:)`.
pub fn make_diag_channel<T: Real>(
    phi: &ReflectionVector<T>,
    h: &CMatrix<T>,
    g: &CMatrix<T>,
) -> Result<CMatrix<T>> {
    let k = phi.len();
    if h.ncols() != k {
        return Err(Error::dims("H (columns)", k, h.ncols()));
    }
    if g.nrows() != k {
        return Err(Error::dims("G (rows)", k, g.nrows()));
    }
    let mut scaled = h.clone();
    for (mut col, c) in scaled.column_iter_mut().zip(phi.coeffs().iter()) {
        col *= *c;
    }
    Ok(scaled * g)
}

/// Normalised response of a half-wavelength uniform linear array:
/// `a(angle)[m] = exp(j pi m sin(angle)) / sqrt(M)`.
pub fn steering_vector<T: Real>(num_elements: usize, angle: T) -> CVector<T> {
    assert!(num_elements >= 1, "steering vector needs at least one element");
    let norm = T::one() / lit::<T>(num_elements as f64).sqrt();
    let phase_step = T::pi() * angle.sin();
    DVector::from_fn(num_elements, |m, _| {
        let phase = phase_step * lit::<T>(m as f64);
        Complex::new(phase.cos() * norm, phase.sin() * norm)
    })
}

/// Column-stacking `vec(M)`.
pub fn vectorize<T: Real>(m: &CMatrix<T>) -> CVector<T> {
    // nalgebra stores column-major, so the raw storage already is vec(M).
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vectorize`].
pub fn unvectorize<T: Real>(v: &CVector<T>, rows: usize, cols: usize) -> Result<CMatrix<T>> {
    if rows * cols != v.len() {
        return Err(Error::dims("vectorized matrix", rows * cols, v.len()));
    }
    Ok(DMatrix::from_column_slice(rows, cols, v.as_slice()))
}

/// Entrywise product of two vectors.
pub fn hadamard<T: Real>(a: &CVector<T>, b: &CVector<T>) -> Result<CVector<T>> {
    if a.len() != b.len() {
        return Err(Error::dims("Hadamard operand", a.len(), b.len()));
    }
    Ok(a.component_mul(b))
}

/// `10^(db/10)`, applied to powers and variances.
pub fn db_to_linear<T: Real>(db: T) -> T {
    lit::<T>(10.0).powf(db / lit(10.0))
}

/// `10 log10(x)`.
pub fn linear_to_db<T: Real>(x: T) -> T {
    lit::<T>(10.0) * x.log10()
}

/// Unit-modulus phasor `exp(j angle(z))`; the angle of zero is taken as zero.
#[inline]
pub fn unit_phasor<T: Real>(z: Complex<T>) -> Complex<T> {
    let m = z.modulus();
    if m > T::zero() {
        z.unscale(m)
    } else {
        Complex::new(T::one(), T::zero())
    }
}

/// Complex matrix product computed with four real products, which lets
/// nalgebra dispatch to its optimised real kernels.
pub fn cgemm<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    debug_assert_eq!(a.ncols(), b.nrows());
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    DMatrix::from_fn(a.nrows(), b.ncols(), |i, j| Complex::new(re[(i, j)], im[(i, j)]))
}

fn split<T: Real>(m: &CMatrix<T>) -> (DMatrix<T>, DMatrix<T>) {
    (m.map(|z| z.re), m.map(|z| z.im))
}

/// Squared Frobenius norm.
pub fn frobenius_sq<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// Largest eigenvalue of the Hermitian PSD Gram matrix `A^H A`.
pub fn gram_lambda_max<T: Real>(a: &CMatrix<T>) -> T {
    // Use the smaller of A^H A and A A^H: same non-zero spectrum.
    let gram = if a.nrows() < a.ncols() {
        a * a.adjoint()
    } else {
        a.adjoint() * a
    };
    gram.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(T::zero(), |m, x| if x > m { x } else { m })
}

/// Checks that every entry is finite and both dimensions are positive.
pub fn check_matrix<T: Real>(operand: &'static str, m: &CMatrix<T>) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::dims(operand, "non-empty matrix", format!("{}x{}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::InvalidArgument(format!("{operand} has non-finite entries")));
    }
    Ok(())
}

/// Hermitian part `(M + M^H)/2`.
pub fn hermitian_part<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    (m + m.adjoint()).unscale(lit(2.0))
}

/// Real part of `tr(A B)` computed without forming the product.
pub fn re_trace_product<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = T::zero();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let x = a[(i, j)] * b[(j, i)];
            acc += x.re;
        }
    }
    acc
}

/// `v^H M v` (real part).
pub fn quad_form<T: Real>(m: &CMatrix<T>, v: &CVector<T>) -> T {
    let mv = m * v;
    v.dotc(&mv).re
}

/// Entrywise modulus of a complex matrix.
pub fn modulus<T: Real>(m: &CMatrix<T>) -> DMatrix<T> {
    m.map(|z| z.modulus())
}
