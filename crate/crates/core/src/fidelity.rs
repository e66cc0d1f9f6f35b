//! Uhlmann fidelity `F(rho, sigma) = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`
//! and its two shortcuts: pure second argument and the qubit closed form.

use thiserror::Error;

use crate::linalg::{psd_sqrt, trace_sqrt_psd_in_place, HermitianMatrix, LinalgError};
use crate::scalar::Scalar;
use crate::states::{BlochVector, DensityMatrix, PureState, StateError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FidelityError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("sqrt(rho) sigma sqrt(rho) has eigenvalue {0:e} below the clamp tolerance")]
    Inconsistent(f64),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Fidelity value with the pre-clamp number kept for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityValue<T> {
    pub value: T,
    pub unclamped: T,
}

pub fn fidelity_detailed<T: Scalar>(
    rho: &DensityMatrix<T>,
    sigma: &DensityMatrix<T>,
) -> Result<FidelityValue<T>, FidelityError> {
    if rho.dim() != sigma.dim() {
        return Err(FidelityError::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    // Exactly equal inputs: roundoff in the general route would leave F a few
    // ulps below 1, which sqrt(1 - F) turns into ~1e-8.
    if rho.matrix() == sigma.matrix() {
        return Ok(FidelityValue {
            value: T::one(),
            unclamped: T::one(),
        });
    }
    let root = psd_sqrt(rho.hermitian())?;
    let r = root.as_matrix();
    let inner = HermitianMatrix::from_hermitian_part(&(&(r * sigma.matrix()) * r));
    let n = rho.dim();
    let mut buf = inner.into_matrix().as_slice().to_vec();
    let tr = trace_sqrt_psd_in_place(&mut buf, n)
        .map_err(|min| FidelityError::Inconsistent(min.to_f64().unwrap_or(f64::NAN)))?;
    let unclamped = tr * tr;
    Ok(FidelityValue {
        value: unclamped.max(T::zero()).min(T::one()),
        unclamped,
    })
}

/// Uhlmann fidelity, clamped into `[0, 1]`.
pub fn fidelity<T: Scalar>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T, FidelityError> {
    fidelity_detailed(rho, sigma).map(|f| f.value)
}

/// `<tau| rho |tau>`.
pub fn fidelity_pure<T: Scalar>(rho: &DensityMatrix<T>, tau: &PureState<T>) -> Result<T, FidelityError> {
    if rho.dim() != tau.dim() {
        return Err(FidelityError::DimensionMismatch(rho.dim(), tau.dim()));
    }
    Ok(rho.hermitian().expectation(tau.amplitudes()))
}

/// `(1 + u.v + sqrt(1 - |u|^2) sqrt(1 - |v|^2)) / 2`.
pub fn fidelity_qubit<T: Scalar>(u: &BlochVector<T>, v: &BlochVector<T>) -> Result<T, FidelityError> {
    let u = BlochVector::new(u.x, u.y, u.z)?;
    let v = BlochVector::new(v.x, v.y, v.z)?;
    if u == v {
        return Ok(T::one());
    }
    let f = T::lit(0.5) * (T::one() + u.dot(&v) + u.purity_gap() * v.purity_gap());
    Ok(f.max(T::zero()).min(T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Matrix, C};
    use crate::metrics::trace_distance;
    use crate::rng;
    use crate::states::{from_bloch, random_density, random_pure, random_unitary, to_bloch};

    #[test]
    fn examples() {
        let mut r = rng::stream(31, 0);
        let rho: DensityMatrix<f64> = random_density(3, &mut r).unwrap();
        assert_eq!(fidelity(&rho, &rho).unwrap(), 1.0);
        let copy = DensityMatrix::validate(rho.matrix().clone()).unwrap();
        assert_eq!(fidelity(&rho, &copy).unwrap(), 1.0);

        let k0 = DensityMatrix::<f64>::basis(2, 0).unwrap();
        let k1 = DensityMatrix::<f64>::basis(2, 1).unwrap();
        assert_eq!(fidelity(&k0, &k1).unwrap(), 0.0);

        let north = from_bloch(&BlochVector::new(0.0, 0.0, 1.0).unwrap()).unwrap();
        let mm = DensityMatrix::maximally_mixed(2).unwrap();
        assert!((fidelity(&north, &mm).unwrap() - 0.5f64).abs() < 1e-15);
    }

    #[test]
    fn pure_examples() {
        let mut r = rng::stream(32, 0);
        for d in 2..=4 {
            let tau: PureState<f64> = random_pure(d, &mut r).unwrap();
            let mm = DensityMatrix::maximally_mixed(d).unwrap();
            assert!((fidelity_pure(&mm, &tau).unwrap() - 1.0 / d as f64).abs() < 1e-12);
            assert!((fidelity_pure(&tau.projector(), &tau).unwrap() - 1.0).abs() < 1e-12);
        }
        let k0 = DensityMatrix::<f64>::basis(2, 0).unwrap();
        let one = PureState::new(vec![C::new(0.0, 0.0), C::new(1.0, 0.0)]).unwrap();
        assert_eq!(fidelity_pure(&k0, &one).unwrap(), 0.0);
        assert!(matches!(
            fidelity_pure(&DensityMatrix::maximally_mixed(3).unwrap(), &one),
            Err(FidelityError::DimensionMismatch(3, 2))
        ));
    }

    #[test]
    fn qubit_examples() {
        let o = BlochVector::new(0.0, 0.0, 0.0).unwrap();
        let n = BlochVector::new(0.0, 0.0, 1.0).unwrap();
        let s = BlochVector::new(0.0, 0.0, -1.0).unwrap();
        assert_eq!(fidelity_qubit(&o, &o).unwrap(), 1.0);
        assert_eq!(fidelity_qubit(&n, &s).unwrap(), 0.0);
        assert_eq!(fidelity_qubit(&n, &o).unwrap(), 0.5);
        assert!(fidelity_qubit(&BlochVector::raw(1.0, 1.0, 0.0), &o).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = DensityMatrix::<f64>::maximally_mixed(2).unwrap();
        let b = DensityMatrix::<f64>::maximally_mixed(3).unwrap();
        assert_eq!(fidelity(&a, &b), Err(FidelityError::DimensionMismatch(2, 3)));
    }

    #[test]
    fn symmetric_and_in_range() {
        let mut r = rng::stream(33, 0);
        for i in 0..10_000 {
            let d = 2 + i % 4;
            let a: DensityMatrix<f64> = random_density(d, &mut r).unwrap();
            let b: DensityMatrix<f64> = random_density(d, &mut r).unwrap();
            let f = fidelity(&a, &b).unwrap();
            let g = fidelity(&b, &a).unwrap();
            assert!((0.0..=1.0).contains(&f));
            assert!((f - g).abs() <= 1e-10, "asymmetry {}", (f - g).abs());
        }
    }

    #[test]
    fn unit_fidelity_means_close_states() {
        let mut r = rng::stream(34, 0);
        for _ in 0..500 {
            let a: DensityMatrix<f64> = random_density(3, &mut r).unwrap();
            let noise: DensityMatrix<f64> = random_density(3, &mut r).unwrap();
            let b = DensityMatrix::mix(1.0 - 1e-12, &a, &noise).unwrap();
            let f = fidelity(&a, &b).unwrap();
            if f == 1.0 {
                assert!(trace_distance(&a, &b).unwrap() <= 1e-6);
            }
        }
    }

    #[test]
    fn unitary_invariance() {
        let mut r = rng::stream(35, 0);
        for d in 2..=5 {
            for _ in 0..100 {
                let a: DensityMatrix<f64> = random_density(d, &mut r).unwrap();
                let b: DensityMatrix<f64> = random_density(d, &mut r).unwrap();
                let u: Matrix<f64> = random_unitary(d, &mut r).unwrap();
                let f0 = fidelity(&a, &b).unwrap();
                let f1 = fidelity(&a.conjugate_by(&u), &b.conjugate_by(&u)).unwrap();
                assert!((f0 - f1).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn three_paths_agree() {
        let mut r = rng::stream(36, 0);
        for _ in 0..2_000 {
            let a: DensityMatrix<f64> = random_density(2, &mut r).unwrap();
            let b: DensityMatrix<f64> = random_density(2, &mut r).unwrap();
            let closed = fidelity_qubit(&to_bloch(&a).unwrap(), &to_bloch(&b).unwrap()).unwrap();
            assert!((closed - fidelity(&a, &b).unwrap()).abs() < 1e-9);
            let tau: PureState<f64> = random_pure(2, &mut r).unwrap();
            let p = tau.projector();
            let general = fidelity(&a, &p).unwrap();
            assert!((general - fidelity_pure(&a, &tau).unwrap()).abs() < 1e-9);
            let closed = fidelity_qubit(&to_bloch(&a).unwrap(), &to_bloch(&p).unwrap()).unwrap();
            assert!((general - closed).abs() < 1e-9, "{}", (general - closed).abs());
        }
    }

    #[test]
    fn single_precision_path() {
        let a = DensityMatrix::<f32>::basis(2, 0).unwrap();
        let b = DensityMatrix::<f32>::maximally_mixed(2).unwrap();
        assert!((fidelity(&a, &b).unwrap() - 0.5).abs() < 1e-6);
    }
}
