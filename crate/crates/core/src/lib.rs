//! Reflection-coefficient design for absorptive reconfigurable intelligent
//! surfaces (ARIS).
//!
//! An ARIS element reflects `rho * exp(j theta)` with `0 <= rho <= 1`, so the
//! surface may absorb part of the impinging energy. A conventional RIS is the
//! special case `rho = 1`. The crate covers three interference problems:
//!
//! * [`radarcomm`]: minimise `||D + H diag(phi) G||_F` between a communication
//!   base station and a radar receiver (convex for ARIS, gradient projection
//!   for a phase-only surface).
//! * [`d2d`]: max-min SINR across device-to-device links via semidefinite
//!   relaxation, Dinkelbach iterations and Gaussian randomization.
//! * [`pls`]: secrecy-rate maximisation with an optional jammer via nested
//!   Dinkelbach and sequential convex programming.
//!
//! The low-level numerics (value types, channel synthesis, least-squares
//! kernels) are generic over the real scalar through [`Real`]; the
//! semidefinite machinery runs in `f64`. Concrete aliases for the common
//! scalar choices live at the crate root.

pub mod channels;
pub mod d2d;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod pls;
pub mod quadratic;
pub mod radarcomm;
pub mod reflection;
pub mod scalar;
pub mod solvers;

pub use error::{Error, Result};
pub use reflection::{ReflectionMode, ReflectionVector};
pub use scalar::Real;

/// Dense complex matrix in double precision.
pub type ComplexMatrix = linalg::CMatrix<f64>;
/// Dense complex column vector in double precision.
pub type ComplexVector = linalg::CVector<f64>;
/// Dense complex matrix in single precision.
pub type ComplexMatrixF32 = linalg::CMatrix<f32>;
/// Dense complex column vector in single precision.
pub type ComplexVectorF32 = linalg::CVector<f32>;
/// Reflection vector in double precision.
pub type ReflectionVectorF64 = reflection::ReflectionVector<f64>;
/// Reflection vector in single precision.
pub type ReflectionVectorF32 = reflection::ReflectionVector<f32>;
/// Double-precision complex scalar.
pub type C64 = nalgebra::Complex<f64>;
