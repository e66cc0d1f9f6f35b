//! Fidelity-induced distances between quantum states.
//!
//! The crate computes the usual fidelity-based metrics (Bures angle, Bures
//! metric, Sine metric), the trace and spectral distances, and the T-metric
//! `D_T(rho, sigma) = max_tau |F(rho, tau) - F(sigma, tau)|` together with its
//! pure-state restriction. The [`harness`] module runs seeded Monte-Carlo
//! checks of metric axioms, contractivity under channels, joint convexity and
//! the known bounds.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the precision used by the harness and the CLI.

// `!(x <= tol)` is used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod fidelity;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod optim;
pub mod rng;
pub mod scalar;
pub mod states;
pub mod tmetric;

pub use metrics::MetricKind;
pub use scalar::{Scalar, Tolerances};

pub type Real = f64;
pub type Complex = num_complex::Complex<f64>;
pub type Matrix = linalg::Matrix<f64>;
pub type HermitianMatrix = linalg::HermitianMatrix<f64>;
pub type DensityMatrix = states::DensityMatrix<f64>;
pub type PureState = states::PureState<f64>;
pub type BlochVector = states::BlochVector<f64>;
pub type KrausChannel = channels::KrausChannel<f64>;
pub type OptimizerConfig = tmetric::OptimizerConfig<f64>;
pub type OptResult = tmetric::OptResult<f64>;

pub type DensityMatrix32 = states::DensityMatrix<f32>;
pub type BlochVector32 = states::BlochVector<f32>;
