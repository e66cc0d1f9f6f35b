//! Quantum states: density matrices, pure states and qubit Bloch vectors,
//! plus the random ensembles used by the harness.

use std::fmt;

use num_complex::Complex;
use num_traits::Zero;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::{eigenvalues, HermitianMatrix, LinalgError, Matrix, C};
use crate::scalar::Scalar;

/// One violated density-matrix invariant with its measured deviation.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NotSquare { rows: usize, cols: usize },
    Dimension { dim: usize },
    NotHermitian { i: usize, j: usize, deviation: f64 },
    Trace { trace: f64 },
    NotPsd { min_eigenvalue: f64 },
    NonFinite,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotSquare { rows, cols } => write!(f, "matrix is {rows}x{cols}, not square"),
            Self::Dimension { dim } => write!(f, "dimension {dim} < 2"),
            Self::NotHermitian { i, j, deviation } => {
                write!(f, "hermiticity defect {deviation:e} at ({i},{j})")
            }
            Self::Trace { trace } => write!(f, "trace {trace} != 1"),
            Self::NotPsd { min_eigenvalue } => {
                write!(f, "negative eigenvalue {min_eigenvalue}")
            }
            Self::NonFinite => write!(f, "non-finite entry"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("invalid density matrix: {}", list(.0))]
    Invalid(Vec<Violation>),
    #[error("pure state has squared norm {norm_sqr}, expected 1")]
    NotNormalized { norm_sqr: f64 },
    #[error("Bloch vector has length {length} > 1")]
    OutsideBall { length: f64 },
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dimension {0} is not supported (need at least 2)")]
    DegenerateDimension(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn list(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Unit-trace positive semidefinite Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T> {
    matrix: HermitianMatrix<T>,
}

impl<T: Scalar> DensityMatrix<T> {
    /// Checks every invariant and reports all violations together.
    pub fn validate(m: Matrix<T>) -> Result<Self, StateError> {
        let mut violations = Vec::new();
        if !m.is_square() {
            violations.push(Violation::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
            return Err(StateError::Invalid(violations));
        }
        if m.rows() < 2 {
            violations.push(Violation::Dimension { dim: m.rows() });
            return Err(StateError::Invalid(violations));
        }
        if m.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            violations.push(Violation::NonFinite);
            return Err(StateError::Invalid(violations));
        }
        let tol = T::tolerances();
        let (i, j, dev) = m.hermiticity_defect()?;
        if dev > tol.hermiticity {
            violations.push(Violation::NotHermitian {
                i,
                j,
                deviation: to_f64(dev),
            });
        }
        let h = HermitianMatrix::from_hermitian_part(&m);
        let tr = h.trace();
        if (tr - T::one()).abs() > tol.trace {
            violations.push(Violation::Trace { trace: to_f64(tr) });
        }
        let min = eigenvalues(&h)[0];
        if min < -tol.psd_clamp {
            violations.push(Violation::NotPsd {
                min_eigenvalue: to_f64(min),
            });
        }
        if violations.is_empty() {
            Ok(Self { matrix: h })
        } else {
            Err(StateError::Invalid(violations))
        }
    }

    /// Wraps a matrix produced by a state-preserving operation (mixtures,
    /// channel outputs) after projecting out Hermitian roundoff.
    pub(crate) fn from_trusted(m: &Matrix<T>) -> Self {
        Self {
            matrix: HermitianMatrix::from_hermitian_part(m),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self, StateError> {
        if dim < 2 {
            return Err(StateError::DegenerateDimension(dim));
        }
        let w = T::one() / T::from_usize_lossy(dim);
        Ok(Self {
            matrix: HermitianMatrix::from_real_diagonal(&vec![w; dim]),
        })
    }

    /// Computational basis projector `|k><k|`.
    pub fn basis(dim: usize, k: usize) -> Result<Self, StateError> {
        if dim < 2 {
            return Err(StateError::DegenerateDimension(dim));
        }
        let mut diag = vec![T::zero(); dim];
        diag[k] = T::one();
        Ok(Self {
            matrix: HermitianMatrix::from_real_diagonal(&diag),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn hermitian(&self) -> &HermitianMatrix<T> {
        &self.matrix
    }

    pub fn matrix(&self) -> &Matrix<T> {
        self.matrix.as_matrix()
    }

    /// `lambda * a + (1 - lambda) * b`.
    pub fn mix(lambda: T, a: &Self, b: &Self) -> Result<Self, StateError> {
        if a.dim() != b.dim() {
            return Err(StateError::DimensionMismatch {
                expected: a.dim(),
                got: b.dim(),
            });
        }
        let m = &a.matrix().scale(lambda) + &b.matrix().scale(T::one() - lambda);
        Ok(Self::from_trusted(&m))
    }

    /// `U rho U^dag`.
    pub fn conjugate_by(&self, u: &Matrix<T>) -> Self {
        Self {
            matrix: self.matrix.conjugate_by(u),
        }
    }

    pub fn purity(&self) -> T {
        (self.matrix() * self.matrix()).trace().re
    }

    /// Numerical rank: eigenvalues above the hermiticity tolerance.
    pub fn rank(&self) -> usize {
        let tol = T::tolerances().hermiticity.sqrt();
        eigenvalues(&self.matrix).iter().filter(|&&l| l > tol).count()
    }

    pub fn ensure_same_dim(&self, other: &Self) -> Result<(), StateError> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(StateError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            })
        }
    }

    pub fn cast<U: Scalar>(&self) -> DensityMatrix<U> {
        let m = self.matrix();
        let cast = Matrix::from_fn(m.rows(), m.cols(), |i, j| {
            let z = m[(i, j)];
            C::new(U::lit(to_f64(z.re)), U::lit(to_f64(z.im)))
        });
        DensityMatrix::from_trusted(&cast)
    }
}

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState<T> {
    amplitudes: Vec<C<T>>,
}

impl<T: Scalar> PureState<T> {
    pub fn new(amplitudes: Vec<C<T>>) -> Result<Self, StateError> {
        if amplitudes.len() < 2 {
            return Err(StateError::DegenerateDimension(amplitudes.len()));
        }
        let n2 = norm_sqr(&amplitudes);
        if !((n2 - T::one()).abs() <= T::tolerances().pure_norm) {
            return Err(StateError::NotNormalized { norm_sqr: to_f64(n2) });
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes a nonzero vector.
    pub fn normalized(mut amplitudes: Vec<C<T>>) -> Result<Self, StateError> {
        let n = norm_sqr(&amplitudes).sqrt();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(StateError::NotNormalized {
                norm_sqr: to_f64(n * n),
            });
        }
        for z in amplitudes.iter_mut() {
            *z = *z / n;
        }
        Self::new(amplitudes)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amplitudes
    }

    /// The rank-one projector `|psi><psi|`.
    pub fn projector(&self) -> DensityMatrix<T> {
        DensityMatrix::from_trusted(&Matrix::outer(&self.amplitudes, &self.amplitudes))
    }
}

pub fn purify_projector<T: Scalar>(psi: &PureState<T>) -> DensityMatrix<T> {
    psi.projector()
}

fn norm_sqr<T: Scalar>(v: &[C<T>]) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Real 3-vector in the closed unit ball parametrizing `(I + u.sigma) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> BlochVector<T> {
    pub fn new(x: T, y: T, z: T) -> Result<Self, StateError> {
        let v = Self { x, y, z };
        let len = v.norm();
        if !(len <= T::one() + T::tolerances().bloch_radius) {
            return Err(StateError::OutsideBall { length: to_f64(len) });
        }
        Ok(v)
    }

    /// Unchecked constructor for arbitrary 3-vectors (differences, directions).
    pub const fn raw(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::raw(T::zero(), T::zero(), T::zero())
    }

    pub fn norm_sqr(&self) -> T {
        self.dot(self)
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn dot(&self, o: &Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(&self, o: &Self) -> Self {
        Self::raw(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::raw(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn scale(&self, s: T) -> Self {
        Self::raw(self.x * s, self.y * s, self.z * s)
    }

    pub fn to_array(&self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    /// `sqrt(1 - |u|^2)`. Radii within a few ulps of the sphere count as pure:
    /// the square root would otherwise turn roundoff in `|u|^2` into an error
    /// of order `sqrt(eps)`.
    pub fn purity_gap(&self) -> T {
        let gap = T::one() - self.norm_sqr();
        if gap <= T::lit(16.0) * T::epsilon() {
            T::zero()
        } else {
            gap.sqrt()
        }
    }
}

/// `(I + u1 s1 + u2 s2 + u3 s3) / 2`.
pub fn from_bloch<T: Scalar>(u: &BlochVector<T>) -> Result<DensityMatrix<T>, StateError> {
    let u = BlochVector::new(u.x, u.y, u.z)?;
    let h = T::lit(0.5);
    let m = Matrix::from_rows(vec![
        vec![C::new(h * (T::one() + u.z), T::zero()), C::new(h * u.x, -h * u.y)],
        vec![C::new(h * u.x, h * u.y), C::new(h * (T::one() - u.z), T::zero())],
    ])?;
    Ok(DensityMatrix::from_trusted(&m))
}

/// `u_k = Tr(rho sigma_k)`.
pub fn to_bloch<T: Scalar>(rho: &DensityMatrix<T>) -> Result<BlochVector<T>, StateError> {
    if rho.dim() != 2 {
        return Err(StateError::DimensionMismatch {
            expected: 2,
            got: rho.dim(),
        });
    }
    let m = rho.matrix();
    let two = T::lit(2.0);
    Ok(BlochVector::raw(
        two * m[(0, 1)].re,
        -two * m[(0, 1)].im,
        m[(0, 0)].re - m[(1, 1)].re,
    ))
}

fn check_sampling_dim(d: usize) -> Result<(), StateError> {
    if d < 2 {
        Err(StateError::DegenerateDimension(d))
    } else {
        Ok(())
    }
}

pub(crate) fn complex_gaussian<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> C<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C::new(T::lit(re), T::lit(im))
}

pub(crate) fn ginibre<T: Scalar, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix<T> {
    Matrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-random pure state: normalized vector of i.i.d. complex Gaussians.
pub fn random_pure<T: Scalar, R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<PureState<T>, StateError> {
    check_sampling_dim(d)?;
    loop {
        let v: Vec<C<T>> = (0..d).map(|_| complex_gaussian(rng)).collect();
        if norm_sqr(&v) > T::zero() {
            return PureState::normalized(v);
        }
    }
}

/// Hilbert-Schmidt random mixed state `G G^dag / Tr(G G^dag)`.
pub fn random_density<T: Scalar, R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<DensityMatrix<T>, StateError> {
    check_sampling_dim(d)?;
    let g: Matrix<T> = ginibre(d, d, rng);
    let gg = &g * &g.adjoint();
    let tr = gg.trace().re;
    Ok(DensityMatrix::from_trusted(&gg.scale(T::one() / tr)))
}

/// Haar-random `d x d` unitary via Gram-Schmidt on a Ginibre matrix.
pub fn random_unitary<T: Scalar, R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Matrix<T>, StateError> {
    check_sampling_dim(d)?;
    Ok(orthonormal_columns(ginibre(d, d, rng)))
}

/// Modified Gram-Schmidt on the columns; the implied R factor has a positive
/// real diagonal, which makes Ginibre input map to Haar-distributed output.
pub(crate) fn orthonormal_columns<T: Scalar>(mut a: Matrix<T>) -> Matrix<T> {
    let (n, m) = a.shape();
    for j in 0..m {
        for k in 0..j {
            let ip = (0..n).fold(C::<T>::zero(), |acc, i| acc + a[(i, k)].conj() * a[(i, j)]);
            for i in 0..n {
                let v = a[(i, k)];
                a[(i, j)] = a[(i, j)] - v * ip;
            }
        }
        let norm = (0..n).fold(T::zero(), |acc, i| acc + a[(i, j)].norm_sqr()).sqrt();
        for i in 0..n {
            a[(i, j)] = a[(i, j)] / norm;
        }
    }
    a
}

/// Pauli matrices `(sigma_x, sigma_y, sigma_z)`.
pub fn pauli<T: Scalar>() -> [Matrix<T>; 3] {
    let (o, l) = (T::zero(), T::one());
    let c = |re: T, im: T| Complex::new(re, im);
    [
        Matrix::from_rows(vec![vec![c(o, o), c(l, o)], vec![c(l, o), c(o, o)]]).expect("2x2"),
        Matrix::from_rows(vec![vec![c(o, o), c(o, -l)], vec![c(o, l), c(o, o)]]).expect("2x2"),
        Matrix::from_rows(vec![vec![c(l, o), c(o, o)], vec![c(o, o), c(-l, o)]]).expect("2x2"),
    ]
}
