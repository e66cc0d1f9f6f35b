//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All state, fidelity and metric code is written against [`Scalar`], so the
//! same kernels run in `f32` or `f64`. Validation thresholds scale with the
//! precision of the type through [`Tolerances`].

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Tolerance constants used by validation, the eigensolver and the harness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    /// Max |A_ij - conj(A_ji)| accepted as Hermitian.
    pub hermiticity: T,
    /// Eigenvalues in `[-psd_clamp, 0)` are clamped to zero.
    pub psd_clamp: T,
    /// Max entry deviation for reconstructions such as `sqrt(A)^2 = A`.
    pub reconstruction: T,
    /// Max |Tr(rho) - 1| for a density matrix.
    pub trace: T,
    /// Max |<psi|psi> - 1| for a pure state.
    pub pure_norm: T,
    /// Slack on the Bloch ball radius.
    pub bloch_radius: T,
    /// Max entry deviation of `sum K^dag K` from the identity.
    pub completeness: T,
}

/// Real floating point type usable by the library (`f32` or `f64`).
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    fn tolerances() -> Tolerances<Self>;

    /// Converts an `f64` literal, panicking only if the type cannot hold it.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }
}

impl Scalar for f64 {
    fn tolerances() -> Tolerances<Self> {
        Tolerances {
            hermiticity: 1e-10,
            psd_clamp: 1e-10,
            reconstruction: 1e-8,
            trace: 1e-10,
            pure_norm: 1e-12,
            bloch_radius: 1e-12,
            completeness: 1e-9,
        }
    }
}

impl Scalar for f32 {
    fn tolerances() -> Tolerances<Self> {
        Tolerances {
            hermiticity: 1e-5,
            psd_clamp: 1e-5,
            reconstruction: 1e-4,
            trace: 1e-5,
            pure_norm: 1e-6,
            bloch_radius: 1e-6,
            completeness: 1e-5,
        }
    }
}
