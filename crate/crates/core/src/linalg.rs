//! Dense complex linear algebra for small Hermitian problems.
//!
//! The eigensolver is a cyclic complex Jacobi iteration. Every matrix in this
//! crate is at most a few dozen rows, so the cubic cost per sweep does not
//! matter and the method's accuracy on Hermitian input is what we want.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::scalar::Scalar;

pub type C<T> = Complex<T>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: entries ({i},{j}) and ({j},{i}) differ from conjugates by {deviation:e}")]
    NotHermitian { i: usize, j: usize, deviation: f64 },
    #[error("matrix is not positive semidefinite: most negative eigenvalue {min_eigenvalue:e}")]
    NotPsd { min_eigenvalue: f64 },
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("row {row} has {len} entries, expected {expected}")]
    RaggedRows { row: usize, len: usize, expected: usize },
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C::zero(); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = C::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C<T>>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::RaggedRows {
                row: 0,
                len: data.len(),
                expected: rows * cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<C<T>>>) -> Result<Self, LinalgError> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * m);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != m {
                return Err(LinalgError::RaggedRows {
                    row: i,
                    len: row.len(),
                    expected: m,
                });
            }
            data.extend(row);
        }
        Ok(Self { rows: n, cols: m, data })
    }

    /// Real diagonal matrix.
    pub fn diag(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C::new(v, T::zero());
        }
        m
    }

    /// Outer product `a b^dag`.
    pub fn outer(a: &[C<T>], b: &[C<T>]) -> Self {
        Self::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<C<T>>> {
        self.data.chunks(self.cols.max(1)).map(<[_]>::to_vec).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> C<T> {
        (0..self.rows.min(self.cols)).fold(C::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
    }

    /// Largest absolute entry-wise difference; `None` when shapes differ.
    pub fn max_abs_diff(&self, other: &Self) -> Option<T> {
        if self.shape() != other.shape() {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .fold(T::zero(), |acc, (a, b)| acc.max((a - b).norm())),
        )
    }

    /// Worst violation of `A_ij = conj(A_ji)` as `(i, j, deviation)`.
    pub fn hermiticity_defect(&self) -> Result<(usize, usize, T), LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let mut worst = (0, 0, T::zero());
        for i in 0..self.rows {
            for j in i..self.cols {
                let dev = (self[(i, j)] - self[(j, i)].conj()).norm();
                if dev > worst.2 || dev.is_nan() {
                    worst = (i, j, dev);
                }
            }
        }
        Ok(worst)
    }

    /// `(A + A^dag) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * half)
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::ShapeMismatch {
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] = out.data[i * rhs.cols + j] + a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(v.len(), self.cols, "vector length must match column count");
        (0..self.rows)
            .map(|i| (0..self.cols).fold(C::zero(), |acc, j| acc + self[(i, j)] * v[j]))
            .collect()
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(C<T>, C<T>) -> C<T>) -> Self {
        assert_eq!(self.shape(), rhs.shape(), "matrix shapes must agree");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = C<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Scalar> Mul for &Matrix<T> {
    type Output = Matrix<T>;

    /// Panics on incompatible shapes; use [`Matrix::try_mul`] to handle them.
    fn mul(self, rhs: Self) -> Matrix<T> {
        self.try_mul(rhs).expect("incompatible matrix shapes")
    }
}

impl<T: Scalar> Add for &Matrix<T> {
    type Output = Matrix<T>;

    fn add(self, rhs: Self) -> Matrix<T> {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl<T: Scalar> Sub for &Matrix<T> {
    type Output = Matrix<T>;

    fn sub(self, rhs: Self) -> Matrix<T> {
        self.zip_with(rhs, |a, b| a - b)
    }
}

/// A square matrix known to be Hermitian.
///
/// Construction checks the Hermitian invariant against the scalar type's
/// tolerance and then stores the exact Hermitian part, so downstream solvers
/// never see asymmetric roundoff.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix<T> {
    inner: Matrix<T>,
}

impl<T: Scalar> HermitianMatrix<T> {
    pub fn new(m: Matrix<T>) -> Result<Self, LinalgError> {
        Self::with_tolerance(m, T::tolerances().hermiticity)
    }

    pub fn with_tolerance(m: Matrix<T>, tol: T) -> Result<Self, LinalgError> {
        let (i, j, dev) = m.hermiticity_defect()?;
        if !(dev <= tol) {
            return Err(LinalgError::NotHermitian {
                i,
                j,
                deviation: dev.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self::from_hermitian_part(&m))
    }

    /// Projects onto the Hermitian part without checking how far away `m` was.
    pub fn from_hermitian_part(m: &Matrix<T>) -> Self {
        Self {
            inner: m.hermitian_part(),
        }
    }

    pub fn from_real_diagonal(values: &[T]) -> Self {
        Self {
            inner: Matrix::diag(values),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.rows
    }

    pub fn as_matrix(&self) -> &Matrix<T> {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.inner
    }

    pub fn trace(&self) -> T {
        self.inner.trace().re
    }

    pub fn neg(&self) -> Self {
        Self {
            inner: self.inner.scale(-T::one()),
        }
    }

    /// Difference of two Hermitian matrices of equal size.
    pub fn difference(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::ShapeMismatch {
                left: self.inner.shape(),
                right: other.inner.shape(),
            });
        }
        Ok(Self {
            inner: &self.inner - &other.inner,
        })
    }

    /// `U A U^dag`, Hermitian by construction.
    pub fn conjugate_by(&self, u: &Matrix<T>) -> Self {
        let m = &(u * &self.inner) * &u.adjoint();
        Self::from_hermitian_part(&m)
    }

    /// `<v| A |v>`, real up to roundoff.
    pub fn expectation(&self, v: &[C<T>]) -> T {
        let av = self.inner.mul_vec(v);
        v.iter()
            .zip(&av)
            .fold(C::zero(), |acc: C<T>, (x, y)| acc + x.conj() * y)
            .re
    }
}

/// Eigendecomposition with eigenvalues ascending and eigenvectors stored as
/// the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct Eigen<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Scalar> Eigen<T> {
    pub fn vector(&self, k: usize) -> Vec<C<T>> {
        self.vectors.column(k)
    }

    /// `sum_k f(lambda_k) v_k v_k^dag`.
    pub fn reconstruct_with(&self, f: impl Fn(T) -> T) -> Matrix<T> {
        let n = self.values.len();
        let mut out = Matrix::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            for i in 0..n {
                let vi = self.vectors[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] = out[(i, j)] + vi * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi on a row-major `n x n` Hermitian buffer. On return the real
/// parts of the diagonal hold the eigenvalues (unsorted); `vectors`, when
/// given, must start as the identity and receives eigenvectors as columns.
pub(crate) fn jacobi_in_place<T: Scalar>(a: &mut [C<T>], n: usize, mut vectors: Option<&mut [C<T>]>) {
    let eps = T::epsilon();
    let total: T = a.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
    if total.is_zero() {
        return;
    }
    let threshold = eps * eps * total * T::lit(1e-2);
    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + a[p * n + q].norm_sqr();
            }
        }
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let g = apq.norm();
                if g.is_zero() {
                    continue;
                }
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                // Rotation U = D P with D = diag(1, e^{-i phi}) removing the
                // phase of a_pq and P the real Jacobi rotation.
                let phase = apq / g;
                let theta = (aqq - app) / (g + g);
                let t = theta.signum() / (theta.abs() + (T::one() + theta * theta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                let ephi_conj = phase.conj();
                let u_pp = C::new(c, T::zero());
                let u_pq = C::new(s, T::zero());
                let u_qp = ephi_conj * (-s);
                let u_qq = ephi_conj * c;
                // A <- A U
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * u_pp + akq * u_qp;
                    a[k * n + q] = akp * u_pq + akq * u_qq;
                }
                // A <- U^dag A
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = u_pp.conj() * apk + u_qp.conj() * aqk;
                    a[q * n + k] = u_pq.conj() * apk + u_qq.conj() * aqk;
                }
                a[p * n + q] = C::zero();
                a[q * n + p] = C::zero();
                a[p * n + p] = C::new(a[p * n + p].re, T::zero());
                a[q * n + q] = C::new(a[q * n + q].re, T::zero());
                if let Some(v) = vectors.as_deref_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = vkp * u_pp + vkq * u_qp;
                        v[k * n + q] = vkp * u_pq + vkq * u_qq;
                    }
                }
            }
        }
    }
}

/// Full eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are ascending. Each eigenvector is phase-normalized so that its
/// first component with modulus above the hermiticity tolerance is real and
/// positive; eigenvalues that tie within that tolerance are ordered by the
/// index of that component, then by its modulus (largest first).
pub fn eigh<T: Scalar>(h: &HermitianMatrix<T>) -> Eigen<T> {
    let n = h.dim();
    let mut a = h.inner.data.clone();
    let mut v = Matrix::<T>::identity(n).data;
    jacobi_in_place(&mut a, n, Some(&mut v));
    let tol = T::tolerances().hermiticity;

    let mut pairs: Vec<(T, Vec<C<T>>)> = (0..n)
        .map(|k| {
            let mut col: Vec<C<T>> = (0..n).map(|i| v[i * n + k]).collect();
            let norm = col.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt();
            if let Some(lead) = col.iter().find(|z| z.norm() > tol).copied() {
                let phase = lead.conj() / lead.norm();
                for z in col.iter_mut() {
                    *z = *z * phase / norm;
                }
            }
            (a[k * n + k].re, col)
        })
        .collect();

    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
    let lead_key = |col: &[C<T>]| -> (usize, T) {
        col.iter()
            .enumerate()
            .find(|(_, z)| z.norm() > tol)
            .map_or((n, T::zero()), |(i, z)| (i, -z.norm()))
    };
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && pairs[end].0 - pairs[end - 1].0 <= tol {
            end += 1;
        }
        if end - start > 1 {
            pairs[start..end].sort_by(|x, y| {
                let kx = lead_key(&x.1);
                let ky = lead_key(&y.1);
                kx.0.cmp(&ky.0)
                    .then(kx.1.partial_cmp(&ky.1).unwrap_or(std::cmp::Ordering::Equal))
            });
        }
        start = end;
    }

    let values = pairs.iter().map(|p| p.0).collect();
    let vectors = Matrix::from_fn(n, n, |i, k| pairs[k].1[i]);
    Eigen { values, vectors }
}

/// Validating entry point: checks hermiticity before decomposing.
pub fn hermitian_eig<T: Scalar>(m: &Matrix<T>) -> Result<Eigen<T>, LinalgError> {
    Ok(eigh(&HermitianMatrix::new(m.clone())?))
}

/// Eigenvalues only, ascending.
pub fn eigenvalues<T: Scalar>(h: &HermitianMatrix<T>) -> Vec<T> {
    let n = h.dim();
    let mut a = h.inner.data.clone();
    jacobi_in_place(&mut a, n, None);
    let mut values: Vec<T> = (0..n).map(|k| a[k * n + k].re).collect();
    values.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    values
}

pub fn largest_eigenvalue<T: Scalar>(h: &HermitianMatrix<T>) -> T {
    eigenvalues(h).last().copied().unwrap_or_else(T::zero)
}

/// Principal square root of a PSD matrix. Eigenvalues in `[-psd_clamp, 0)`
/// are treated as zero.
pub fn psd_sqrt<T: Scalar>(a: &HermitianMatrix<T>) -> Result<HermitianMatrix<T>, LinalgError> {
    let eig = eigh(a);
    let min = eig.values.first().copied().unwrap_or_else(T::zero);
    if min < -T::tolerances().psd_clamp {
        return Err(LinalgError::NotPsd {
            min_eigenvalue: min.to_f64().unwrap_or(f64::NAN),
        });
    }
    let root = eig.reconstruct_with(|lam| lam.max(T::zero()).sqrt());
    Ok(HermitianMatrix::from_hermitian_part(&root))
}

/// Roundoff floor below which an eigenvalue of an `n x n` PSD matrix with
/// largest eigenvalue `max` cannot be told apart from zero.
#[inline]
pub(crate) fn noise_floor<T: Scalar>(n: usize, max: T) -> T {
    T::lit(4.0) * T::from_usize_lossy(n) * T::epsilon() * max.abs()
}

/// `Tr sqrt(M)` for a PSD buffer `m` (destroyed). Eigenvalues below the
/// roundoff floor are dropped; anything below `-psd_clamp` is reported.
pub(crate) fn trace_sqrt_psd_in_place<T: Scalar>(m: &mut [C<T>], n: usize) -> Result<T, T> {
    let clamp = T::tolerances().psd_clamp;
    if n == 2 {
        let a = m[0].re;
        let d = m[3].re;
        let tr = a + d;
        let det = a * d - m[1].norm_sqr();
        let max = tr.abs();
        // smaller eigenvalue ~ det / tr
        if tr < -clamp {
            return Err(tr);
        }
        let disc = ((a - d) * (a - d) + T::lit(4.0) * m[1].norm_sqr()).sqrt();
        let lo = (tr - disc) * T::lit(0.5);
        if lo < -clamp {
            return Err(lo);
        }
        let hi = ((tr + disc) * T::lit(0.5)).max(T::zero());
        if lo <= noise_floor(n, max) || det <= T::zero() {
            return Ok(hi.sqrt());
        }
        return Ok((tr + T::lit(2.0) * det.sqrt()).max(T::zero()).sqrt());
    }
    jacobi_in_place(m, n, None);
    let mut max = T::zero();
    let mut min = T::infinity();
    for k in 0..n {
        max = max.max(m[k * n + k].re);
        min = min.min(m[k * n + k].re);
    }
    if min < -clamp {
        return Err(min);
    }
    let floor = noise_floor(n, max);
    Ok((0..n)
        .map(|k| m[k * n + k].re)
        .filter(|&lam| lam > floor)
        .fold(T::zero(), |acc, lam| acc + lam.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn c(re: f64, im: f64) -> C<f64> {
        C::new(re, im)
    }

    fn gaussian(n: usize, m: usize, r: &mut impl Rng) -> Matrix<f64> {
        Matrix::from_fn(n, m, |_, _| c(r.sample(StandardNormal), r.sample(StandardNormal)))
    }

    fn random_hermitian(n: usize, r: &mut impl Rng) -> HermitianMatrix<f64> {
        HermitianMatrix::from_hermitian_part(&gaussian(n, n, r))
    }

    fn check_decomposition(h: &HermitianMatrix<f64>) {
        let e = eigh(h);
        let n = h.dim();
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        for k in 0..n {
            let v = e.vector(k);
            let hv = h.as_matrix().mul_vec(&v);
            for i in 0..n {
                assert!((hv[i] - v[i] * e.values[k]).norm() < 1e-9, "H v != lambda v");
            }
            for l in 0..n {
                let w = e.vector(l);
                let ip = v.iter().zip(&w).fold(c(0.0, 0.0), |a, (x, y)| a + x.conj() * y);
                let expect = if k == l { 1.0 } else { 0.0 };
                assert!((ip - c(expect, 0.0)).norm() < 1e-10, "not orthonormal");
            }
        }
        let back = e.reconstruct_with(|x| x);
        assert!(back.max_abs_diff(h.as_matrix()).unwrap() < 1e-8);
    }

    #[test]
    fn diagonal_input_sorts_ascending() {
        let h = HermitianMatrix::from_real_diagonal(&[2.0, 1.0]);
        let e = eigh(&h);
        assert_eq!(e.values, vec![1.0, 2.0]);
        assert!((e.vectors[(1, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((e.vectors[(0, 1)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn pauli_x_spectrum() {
        let x = Matrix::from_rows(vec![vec![c(0., 0.), c(1., 0.)], vec![c(1., 0.), c(0., 0.)]]).unwrap();
        let e = hermitian_eig(&x).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        check_decomposition(&HermitianMatrix::new(x).unwrap());
    }

    #[test]
    fn identity_has_unit_spectrum_and_standard_basis() {
        let e = eigh(&HermitianMatrix::new(Matrix::<f64>::identity(3)).unwrap());
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        assert!(e.vectors.max_abs_diff(&Matrix::identity(3)).unwrap() < 1e-15);
    }

    #[test]
    fn non_hermitian_input_names_the_pair() {
        let m = Matrix::from_rows(vec![
            vec![c(1., 0.), c(0., 0.), c(0.5, 0.)],
            vec![c(0., 0.), c(1., 0.), c(0., 0.)],
            vec![c(0., 0.), c(0., 0.), c(1., 0.)],
        ])
        .unwrap();
        match hermitian_eig(&m) {
            Err(LinalgError::NotHermitian { i, j, deviation }) => {
                assert_eq!((i, j), (0, 2));
                assert!((deviation - 0.5).abs() < 1e-15);
            }
            other => panic!("expected NotHermitian, got {other:?}"),
        }
        assert!(matches!(
            hermitian_eig(&Matrix::<f64>::zeros(2, 3)),
            Err(LinalgError::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn random_decompositions_are_accurate() {
        let mut r = rng::stream(11, 0);
        for n in 1..=8 {
            for _ in 0..20 {
                check_decomposition(&random_hermitian(n, &mut r));
            }
        }
    }

    #[test]
    fn complex_phases_are_handled() {
        let m = Matrix::from_rows(vec![vec![c(1., 0.), c(0., -1.)], vec![c(0., 1.), c(1., 0.)]]).unwrap();
        let e = hermitian_eig(&m).unwrap();
        assert!((e.values[0]).abs() < 1e-14 && (e.values[1] - 2.0).abs() < 1e-14);
        check_decomposition(&HermitianMatrix::new(m).unwrap());
    }

    #[test]
    fn sqrt_examples() {
        let i2 = HermitianMatrix::new(Matrix::<f64>::identity(2)).unwrap();
        assert!(
            psd_sqrt(&i2)
                .unwrap()
                .as_matrix()
                .max_abs_diff(&Matrix::identity(2))
                .unwrap()
                < 1e-15
        );
        let d = HermitianMatrix::from_real_diagonal(&[4.0, 9.0]);
        let r = psd_sqrt(&d).unwrap();
        assert!(r.as_matrix().max_abs_diff(&Matrix::diag(&[2.0, 3.0])).unwrap() < 1e-14);
        let p = HermitianMatrix::from_real_diagonal(&[1.0, 0.0]);
        assert!(psd_sqrt(&p).unwrap().as_matrix().max_abs_diff(p.as_matrix()).unwrap() < 1e-15);
    }

    #[test]
    fn sqrt_rejects_negative_and_clamps_tiny() {
        let bad = HermitianMatrix::from_real_diagonal(&[1.0, -0.25]);
        assert_eq!(psd_sqrt(&bad), Err(LinalgError::NotPsd { min_eigenvalue: -0.25 }));
        let tiny = HermitianMatrix::from_real_diagonal(&[1.0, -5e-11]);
        let r = psd_sqrt(&tiny).unwrap();
        assert_eq!(r.as_matrix()[(1, 1)], c(0.0, 0.0));
    }

    #[test]
    fn sqrt_squares_back_for_gram_matrices() {
        let mut r = rng::stream(12, 0);
        for n in 1..=8 {
            let g = gaussian(n, n, &mut r);
            let a = HermitianMatrix::from_hermitian_part(&(&g * &g.adjoint()));
            let s = psd_sqrt(&a).unwrap();
            let sq = s.as_matrix() * s.as_matrix();
            assert!(sq.max_abs_diff(a.as_matrix()).unwrap() < 1e-8);
        }
    }

    #[test]
    fn largest_eigenvalue_examples() {
        assert_eq!(
            largest_eigenvalue(&HermitianMatrix::from_real_diagonal(&[1.0, -1.0])),
            1.0
        );
        assert_eq!(
            largest_eigenvalue(&HermitianMatrix::<f64>::from_real_diagonal(&[0.0, 0.0])),
            0.0
        );
        assert_eq!(
            largest_eigenvalue(&HermitianMatrix::from_real_diagonal(&[-0.5, 0.5])),
            0.5
        );
    }

    #[test]
    fn largest_is_minus_smallest_of_negation() {
        let mut r = rng::stream(13, 0);
        for n in 2..=6 {
            let h = random_hermitian(n, &mut r);
            let lo = eigenvalues(&h.neg())[0];
            assert_eq!(largest_eigenvalue(&h), -lo);
        }
    }

    #[test]
    fn trace_sqrt_matches_eigen_route() {
        let mut r = rng::stream(14, 0);
        for n in 2..=5 {
            for _ in 0..20 {
                let g = gaussian(n, n, &mut r);
                let a = HermitianMatrix::from_hermitian_part(&(&g * &g.adjoint()));
                let want: f64 = eigenvalues(&a).iter().map(|x| x.max(0.0).sqrt()).sum();
                let mut buf = a.as_matrix().as_slice().to_vec();
                let got = trace_sqrt_psd_in_place(&mut buf, n).unwrap();
                assert!((got - want).abs() < 1e-12 * want.max(1.0));
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let h = HermitianMatrix::<f32>::from_hermitian_part(
            &Matrix::from_rows(vec![
                vec![C::new(2.0, 0.0), C::new(0.0, 1.0)],
                vec![C::new(0.0, -1.0), C::new(2.0, 0.0)],
            ])
            .unwrap(),
        );
        let e = eigh(&h);
        assert!((e.values[0] - 1.0).abs() < 1e-6 && (e.values[1] - 3.0).abs() < 1e-6);
    }
}
