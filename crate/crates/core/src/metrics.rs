//! Closed-form distances between density matrices.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::fidelity::{fidelity, FidelityError};
use crate::linalg::{eigenvalues, largest_eigenvalue, HermitianMatrix};
use crate::scalar::Scalar;
use crate::states::DensityMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    BuresAngle,
    BuresMetric,
    SineMetric,
    TraceDistance,
    SpectralMetric,
    PtMetric,
    TMetric,
}

impl MetricKind {
    pub const ALL: [MetricKind; 7] = [
        Self::BuresAngle,
        Self::BuresMetric,
        Self::SineMetric,
        Self::TraceDistance,
        Self::SpectralMetric,
        Self::PtMetric,
        Self::TMetric,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::BuresAngle => "bures_angle",
            Self::BuresMetric => "bures_metric",
            Self::SineMetric => "sine_metric",
            Self::TraceDistance => "trace_distance",
            Self::SpectralMetric => "spectral_metric",
            Self::PtMetric => "pt_metric",
            Self::TMetric => "t_metric",
        }
    }

    /// Whether the value has a closed form at dimension `d`.
    pub fn is_closed_form(self, d: usize) -> bool {
        self != Self::TMetric || d == 2
    }

    /// Evaluates every metric that needs no optimizer. `TMetric` is only
    /// available here for qubits, where it equals the Sine metric.
    pub fn evaluate<T: Scalar>(
        self,
        rho: &DensityMatrix<T>,
        sigma: &DensityMatrix<T>,
    ) -> Option<Result<T, FidelityError>> {
        Some(match self {
            Self::BuresAngle => bures_angle(rho, sigma),
            Self::BuresMetric => bures_metric(rho, sigma),
            Self::SineMetric => sine_metric(rho, sigma),
            Self::TraceDistance => trace_distance(rho, sigma),
            Self::SpectralMetric => spectral_metric(rho, sigma),
            Self::PtMetric => pt_metric(rho, sigma),
            Self::TMetric if rho.dim() == 2 && sigma.dim() == 2 => crate::tmetric::t_metric_qubit_states(rho, sigma),
            Self::TMetric => return None,
        })
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownMetric(pub String);

impl fmt::Display for UnknownMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown metric '{}' (expected one of bures_angle, bures, sine, trace, spectral, pt, tmetric)",
            self.0
        )
    }
}

impl std::error::Error for UnknownMetric {}

impl FromStr for MetricKind {
    type Err = UnknownMetric;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Ok(match norm.as_str() {
            "bures_angle" | "angle" | "a" => Self::BuresAngle,
            "bures_metric" | "bures" | "b" => Self::BuresMetric,
            "sine_metric" | "sine" | "c" => Self::SineMetric,
            "trace_distance" | "trace" | "tr" => Self::TraceDistance,
            "spectral_metric" | "spectral" | "ds" => Self::SpectralMetric,
            "pt_metric" | "pt" | "ptmetric" => Self::PtMetric,
            "t_metric" | "tmetric" | "t" => Self::TMetric,
            _ => return Err(UnknownMetric(s.to_string())),
        })
    }
}

/// Angle, Bures and Sine values derived from one fidelity value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityDistances<T> {
    pub angle: T,
    pub bures: T,
    pub sine: T,
}

impl<T: Scalar> FidelityDistances<T> {
    pub fn from_fidelity(f: T) -> Self {
        let f = f.max(T::zero()).min(T::one());
        let root = f.sqrt().min(T::one());
        Self {
            angle: root.acos(),
            bures: (T::lit(2.0) - T::lit(2.0) * root).max(T::zero()).sqrt(),
            sine: (T::one() - f).max(T::zero()).sqrt(),
        }
    }
}

/// `arccos sqrt(F)`, in `[0, pi/2]`.
pub fn bures_angle<T: Scalar>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T, FidelityError> {
    Ok(FidelityDistances::from_fidelity(fidelity(rho, sigma)?).angle)
}

/// `sqrt(2 - 2 sqrt(F))`, in `[0, sqrt 2]`.
pub fn bures_metric<T: Scalar>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T, FidelityError> {
    Ok(FidelityDistances::from_fidelity(fidelity(rho, sigma)?).bures)
}

/// `sqrt(1 - F)`, in `[0, 1]`.
pub fn sine_metric<T: Scalar>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T, FidelityError> {
    Ok(FidelityDistances::from_fidelity(fidelity(rho, sigma)?).sine)
}

fn difference<T: Scalar>(
    rho: &DensityMatrix<T>,
    sigma: &DensityMatrix<T>,
) -> Result<HermitianMatrix<T>, FidelityError> {
    if rho.dim() != sigma.dim() {
        return Err(FidelityError::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    Ok(rho.hermitian().difference(sigma.hermitian())?)
}

/// Half the sum of absolute eigenvalues of `rho - sigma`.
pub fn trace_distance<T: Scalar>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T, FidelityError> {
    let ev = eigenvalues(&difference(rho, sigma)?);
    Ok(T::lit(0.5) * ev.iter().fold(T::zero(), |acc, l| acc + l.abs()))
}

/// Largest eigenvalue of `rho - sigma`, i.e. the maximum of `Tr[tau (rho - sigma)]`
/// over pure `tau`.
///
/// Argument order matters: `e_max(rho, sigma)` and `e_max(sigma, rho)` differ
/// in general, so this is not a metric on its own.
pub fn e_max<T: Scalar>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T, FidelityError> {
    Ok(largest_eigenvalue(&difference(rho, sigma)?))
}

/// Operator norm of `rho - sigma`: `max(e_max(rho, sigma), e_max(sigma, rho))`.
pub fn spectral_metric<T: Scalar>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T, FidelityError> {
    let ev = eigenvalues(&difference(rho, sigma)?);
    let lo = ev.first().copied().unwrap_or_else(T::zero);
    let hi = ev.last().copied().unwrap_or_else(T::zero);
    Ok(hi.max(-lo).max(T::zero()))
}

/// Maximum of `|F(rho, tau) - F(sigma, tau)|` over pure `tau`, which reduces
/// exactly to the spectral metric.
pub fn pt_metric<T: Scalar>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T, FidelityError> {
    spectral_metric(rho, sigma)
}
