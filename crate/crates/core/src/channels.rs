//! Quantum channels in Kraus form.

use num_complex::Complex;
use rand::Rng;
use thiserror::Error;

use crate::linalg::{LinalgError, Matrix};
use crate::scalar::Scalar;
use crate::states::{ginibre, orthonormal_columns, DensityMatrix, StateError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("channel needs at least one Kraus operator")]
    Empty,
    #[error("Kraus operator {index} is {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    Shape {
        index: usize,
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
    #[error("sum of K^dag K deviates from the identity by {deviation:e}")]
    Incomplete { deviation: f64 },
    #[error("input has dimension {got}, channel expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("depolarizing probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("invalid channel dimensions: d = {dim}, environment = {env_dim}")]
    Parameters { dim: usize, env_dim: usize },
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Completely positive trace-preserving map `rho -> sum_i K_i rho K_i^dag`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel<T> {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<Matrix<T>>,
}

impl<T: Scalar> KrausChannel<T> {
    /// Checks shapes and completeness `sum K^dag K = I`.
    pub fn new(kraus: Vec<Matrix<T>>) -> Result<Self, ChannelError> {
        let first = kraus.first().ok_or(ChannelError::Empty)?;
        let (dim_out, dim_in) = first.shape();
        for (index, k) in kraus.iter().enumerate() {
            if k.shape() != (dim_out, dim_in) {
                return Err(ChannelError::Shape {
                    index,
                    rows: k.rows(),
                    cols: k.cols(),
                    expected_rows: dim_out,
                    expected_cols: dim_in,
                });
            }
        }
        let deviation = completeness_defect(&kraus);
        if !(deviation <= T::tolerances().completeness) {
            return Err(ChannelError::Incomplete {
                deviation: deviation.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { dim_in, dim_out, kraus })
    }

    pub fn identity(dim: usize) -> Result<Self, ChannelError> {
        Self::new(vec![Matrix::identity(dim)])
    }

    /// `rho -> U rho U^dag`; fails unless `u` is unitary.
    pub fn unitary(u: Matrix<T>) -> Result<Self, ChannelError> {
        Self::new(vec![u])
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus_ops(&self) -> &[Matrix<T>] {
        &self.kraus
    }

    pub fn apply(&self, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>, ChannelError> {
        if rho.dim() != self.dim_in {
            return Err(ChannelError::DimensionMismatch {
                expected: self.dim_in,
                got: rho.dim(),
            });
        }
        let mut out = Matrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out = &out + &(&(k * rho.matrix()) * &k.adjoint());
        }
        Ok(DensityMatrix::validate(out)?)
    }
}

fn completeness_defect<T: Scalar>(kraus: &[Matrix<T>]) -> T {
    let dim_in = kraus[0].cols();
    let mut sum = Matrix::zeros(dim_in, dim_in);
    for k in kraus {
        sum = &sum + &(&k.adjoint() * k);
    }
    sum.max_abs_diff(&Matrix::identity(dim_in)).unwrap_or_else(T::infinity)
}

/// Random channel from a Haar isometry `V: C^d -> C^(d env_dim)` cut into
/// `env_dim` Kraus blocks of size `d x d`. `env_dim = 1` gives a Haar unitary.
pub fn random_channel<T: Scalar, R: Rng + ?Sized>(
    d: usize,
    env_dim: usize,
    rng: &mut R,
) -> Result<KrausChannel<T>, ChannelError> {
    if d < 2 || env_dim == 0 {
        return Err(ChannelError::Parameters { dim: d, env_dim });
    }
    let v = orthonormal_columns(ginibre::<T, R>(d * env_dim, d, rng));
    let kraus = (0..env_dim)
        .map(|e| Matrix::from_fn(d, d, |i, j| v[(e * d + i, j)]))
        .collect();
    KrausChannel::new(kraus)
}

/// `rho -> (1 - p) rho + p I / d`, written with the `d^2` clock-and-shift
/// unitaries `X^a Z^b`.
pub fn depolarizing<T: Scalar>(d: usize, p: T) -> Result<KrausChannel<T>, ChannelError> {
    if !(T::zero()..=T::one()).contains(&p) {
        return Err(ChannelError::Probability(p.to_f64().unwrap_or(f64::NAN)));
    }
    if d < 2 {
        return Err(ChannelError::Parameters { dim: d, env_dim: 1 });
    }
    let d2 = T::from_usize_lossy(d * d);
    let w0 = (T::one() - p + p / d2).sqrt();
    let w = (p / d2).sqrt();
    let tau = T::lit(2.0) * T::PI() / T::from_usize_lossy(d);
    let mut kraus = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            let weight = if a == 0 && b == 0 { w0 } else { w };
            if weight.is_zero() {
                continue;
            }
            // (X^a Z^b)|j> = omega^(b j) |j + a>
            let mut k = Matrix::zeros(d, d);
            for j in 0..d {
                let phase = tau * T::from_usize_lossy((b * j) % d);
                k[((j + a) % d, j)] = Complex::from_polar(weight, phase);
            }
            kraus.push(k);
        }
    }
    KrausChannel::new(kraus)
}
