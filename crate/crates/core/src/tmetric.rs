//! The T-metric `D_T(rho, sigma) = max_tau |F(rho, tau) - F(sigma, tau)|`,
//! maximized over all density matrices `tau`.
//!
//! For qubits the maximum is the Sine metric `sqrt(1 - F(rho, sigma))` and the
//! maximizer is known in closed form. For larger dimensions there is no closed
//! form; [`t_metric_numeric`] runs a seeded multi-start simplex search over
//! the state space. Every value it returns is the objective evaluated at an
//! actual state, so it is a certified lower bound on `D_T`.
//!
//! The search writes `tau = L L^dag / Tr(L L^dag)` with `L` lower triangular
//! (real diagonal), which reaches every density matrix with `d^2` real
//! parameters. With that factor the fidelity needs no matrix square root of
//! `tau`: `F(rho, tau) = (Tr sqrt(L^dag rho L))^2 / Tr(L^dag L)`.

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fidelity::{fidelity, fidelity_qubit, FidelityError};
use crate::linalg::{eigh, trace_sqrt_psd_in_place, Matrix, C};
use crate::metrics::FidelityDistances;
use crate::optim::NelderMead;
use crate::rng;
use crate::scalar::Scalar;
use crate::states::{
    ginibre, random_density, random_pure, to_bloch, BlochVector, DensityMatrix, PureState, StateError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TMetricError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("the optimal direction is undefined for identical Bloch vectors")]
    IdenticalStates,
    #[error("operation is only defined for qubits, got dimension {0}")]
    NotQubit(usize),
    #[error("invalid optimizer configuration: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Fidelity(#[from] FidelityError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Settings of the multi-start maximizer. Missing JSON fields take the defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct OptimizerConfig<T> {
    pub restarts: usize,
    /// Simplex iterations allowed per local search (one restart, one sign).
    pub max_iterations: usize,
    pub step_tolerance: T,
    /// Restarts within this distance of the best value count as agreeing.
    pub value_tolerance: T,
    pub seed: u64,
}

impl<T: Scalar> Default for OptimizerConfig<T> {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_iterations: 2000,
            step_tolerance: T::lit(1e-9),
            value_tolerance: T::lit(1e-10),
            seed: 0,
        }
    }
}

impl<T: Scalar> OptimizerConfig<T> {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn check(&self) -> Result<(), TMetricError> {
        if self.restarts == 0 {
            return Err(TMetricError::Config("restarts must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(TMetricError::Config("max_iterations must be positive"));
        }
        if !(self.step_tolerance > T::zero()) || !(self.value_tolerance > T::zero()) {
            return Err(TMetricError::Config("tolerances must be positive"));
        }
        Ok(())
    }

    fn local_search(&self) -> NelderMead<T> {
        NelderMead::new(self.max_iterations, self.step_tolerance, self.value_tolerance)
    }

    /// Number of agreeing restarts needed to call the search converged.
    pub fn quorum(&self) -> usize {
        self.restarts.div_ceil(2)
    }
}

/// Outcome of a numeric maximization.
#[derive(Debug, Clone)]
pub struct OptResult<T> {
    /// `|F(rho, tau) - F(sigma, tau)|` at `argmax_state`.
    pub value: T,
    pub argmax_state: DensityMatrix<T>,
    pub converged: bool,
    pub iterations_used: usize,
    pub restarts_agreeing: usize,
    /// Best value reached by each restart, in restart order.
    pub restart_values: Vec<T>,
}

/// Evaluates `F(rho, tau)` and `F(sigma, tau)` for `tau` given by a factor
/// `V` (`d x k`, row-major) as `V V^dag / Tr(V V^dag)`.
struct FactorObjective<'a, T> {
    rho: &'a Matrix<T>,
    sigma: &'a Matrix<T>,
    dim: usize,
    rank: usize,
    prod: Vec<C<T>>,
    gram: Vec<C<T>>,
}

impl<'a, T: Scalar> FactorObjective<'a, T> {
    fn new(rho: &'a DensityMatrix<T>, sigma: &'a DensityMatrix<T>, rank: usize) -> Self {
        let dim = rho.dim();
        Self {
            rho: rho.matrix(),
            sigma: sigma.matrix(),
            dim,
            rank,
            prod: vec![C::zero(); dim * rank],
            gram: vec![C::zero(); rank * rank],
        }
    }

    /// `(Tr sqrt(V^dag A V))^2 / ||V||^2`, or `None` on a numerically
    /// indefinite Gram matrix.
    fn fidelity_with(&mut self, a: &Matrix<T>, v: &[C<T>], norm2: T) -> Option<T> {
        let (d, k) = (self.dim, self.rank);
        // prod = A V
        for i in 0..d {
            for j in 0..k {
                let mut acc = C::zero();
                for l in 0..d {
                    acc = acc + a[(i, l)] * v[l * k + j];
                }
                self.prod[i * k + j] = acc;
            }
        }
        // gram = V^dag prod, Hermitian part only
        for p in 0..k {
            for q in p..k {
                let mut acc = C::zero();
                for l in 0..d {
                    acc = acc + v[l * k + p].conj() * self.prod[l * k + q];
                }
                if p == q {
                    self.gram[p * k + p] = C::new(acc.re, T::zero());
                } else {
                    self.gram[p * k + q] = acc;
                    self.gram[q * k + p] = acc.conj();
                }
            }
        }
        let tr = trace_sqrt_psd_in_place(&mut self.gram, k).ok()?;
        Some((tr * tr / norm2).min(T::one()))
    }

    fn fidelities(&mut self, v: &[C<T>]) -> Option<(T, T)> {
        let norm2 = v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
        if !(norm2 > T::zero()) || !norm2.is_finite() {
            return None;
        }
        let rho = self.rho;
        let sigma = self.sigma;
        let f_rho = self.fidelity_with(rho, v, norm2)?;
        let f_sigma = self.fidelity_with(sigma, v, norm2)?;
        Some((f_rho, f_sigma))
    }
}

/// How real parameters map onto the factor `V` of `tau = V V^dag / Tr`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Factorization {
    /// Lower triangular `d x d` with real diagonal: `d^2` parameters.
    Cholesky,
    /// Unconstrained `d x k` complex matrix: `2 d k` parameters.
    Dense { rank: usize },
}

impl Factorization {
    fn rank(self, d: usize) -> usize {
        match self {
            Self::Cholesky => d,
            Self::Dense { rank } => rank,
        }
    }

    fn unpack<T: Scalar>(self, d: usize, x: &[T], v: &mut [C<T>]) {
        match self {
            Self::Cholesky => {
                for z in v.iter_mut() {
                    *z = C::zero();
                }
                for i in 0..d {
                    v[i * d + i] = C::new(x[i], T::zero());
                }
                let mut idx = d;
                for i in 1..d {
                    for j in 0..i {
                        v[i * d + j] = C::new(x[idx], x[idx + 1]);
                        idx += 2;
                    }
                }
            }
            Self::Dense { .. } => {
                for (z, pair) in v.iter_mut().zip(x.chunks_exact(2)) {
                    *z = C::new(pair[0], pair[1]);
                }
            }
        }
    }

    fn pack<T: Scalar>(self, d: usize, v: &[C<T>]) -> Vec<T> {
        match self {
            Self::Cholesky => {
                let mut x = Vec::with_capacity(d * d);
                for i in 0..d {
                    x.push(v[i * d + i].re);
                }
                for i in 1..d {
                    for j in 0..i {
                        x.push(v[i * d + j].re);
                        x.push(v[i * d + j].im);
                    }
                }
                x
            }
            Self::Dense { .. } => v.iter().flat_map(|z| [z.re, z.im]).collect(),
        }
    }

    /// Factor of a starting state.
    fn factor_of<T: Scalar>(self, tau: &DensityMatrix<T>) -> Vec<C<T>> {
        let d = tau.dim();
        match self {
            Self::Cholesky => cholesky_lower(tau.matrix()).as_slice().to_vec(),
            Self::Dense { rank } => {
                // leading `rank` columns of Q sqrt(Lambda), largest eigenvalues first
                let eig = eigh(tau.hermitian());
                let mut v = vec![C::zero(); d * rank];
                for c in 0..rank.min(d) {
                    let k = d - 1 - c;
                    let w = eig.values[k].max(T::zero()).sqrt();
                    for i in 0..d {
                        v[i * rank + c] = eig.vectors[(i, k)] * w;
                    }
                }
                v
            }
        }
    }

    fn state_of<T: Scalar>(self, d: usize, x: &[T]) -> DensityMatrix<T> {
        let k = self.rank(d);
        let mut v = vec![C::zero(); d * k];
        self.unpack(d, x, &mut v);
        let vm = Matrix::from_vec(d, k, v).expect("factor shape");
        let g = &vm * &vm.adjoint();
        let tr = g.trace().re;
        DensityMatrix::from_trusted(&g.scale(T::one() / tr))
    }
}

/// Cholesky factor of a PSD matrix, tolerating rank deficiency: pivots at the
/// roundoff level produce a zero column.
fn cholesky_lower<T: Scalar>(a: &Matrix<T>) -> Matrix<T> {
    let n = a.rows();
    let mut l = Matrix::<T>::zeros(n, n);
    let scale = (0..n).fold(T::zero(), |acc, i| acc.max(a[(i, i)].re));
    let floor = T::lit(64.0) * T::epsilon() * scale;
    for j in 0..n {
        let mut diag = a[(j, j)].re;
        for k in 0..j {
            diag = diag - l[(j, k)].norm_sqr();
        }
        if diag <= floor {
            continue;
        }
        let ljj = diag.sqrt();
        l[(j, j)] = C::new(ljj, T::zero());
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    l
}

/// One local search per sign of `F(rho, tau) - F(sigma, tau)`.
struct SearchOutcome<T> {
    value: T,
    x: Vec<T>,
    iterations: usize,
}

fn search_from<T: Scalar>(
    objective: &mut FactorObjective<'_, T>,
    fact: Factorization,
    cfg: &OptimizerConfig<T>,
    start: &DensityMatrix<T>,
) -> SearchOutcome<T> {
    let d = objective.dim;
    let k = fact.rank(d);
    let x0 = fact.pack(d, &fact.factor_of(start));
    let nm = cfg.local_search();
    let mut v = vec![C::zero(); d * k];
    let mut best = SearchOutcome {
        value: T::neg_infinity(),
        x: x0.clone(),
        iterations: 0,
    };
    for sign in [T::one(), -T::one()] {
        let mut f = |x: &[T]| {
            fact.unpack(d, x, &mut v);
            match objective.fidelities(&v) {
                Some((a, b)) => -(sign * (a - b)),
                None => T::infinity(),
            }
        };
        let m = nm.minimize(&mut f, &x0);
        best.iterations += m.iterations;
        let value = -m.value;
        if value > best.value {
            best.value = value;
            best.x = m.x;
        }
    }
    best
}

fn validate_pair<T: Scalar>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<(), TMetricError> {
    if rho.dim() != sigma.dim() {
        return Err(TMetricError::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    Ok(())
}

fn identical<T: Scalar>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> bool {
    rho.matrix().max_abs_diff(sigma.matrix()) == Some(T::zero())
}

fn trivial_result<T: Scalar>(rho: &DensityMatrix<T>, cfg: &OptimizerConfig<T>) -> OptResult<T> {
    OptResult {
        value: T::zero(),
        argmax_state: rho.clone(),
        converged: true,
        iterations_used: 0,
        restarts_agreeing: cfg.restarts,
        restart_values: vec![T::zero(); cfg.restarts],
    }
}

fn multistart<T: Scalar>(
    rho: &DensityMatrix<T>,
    sigma: &DensityMatrix<T>,
    fact: Factorization,
    cfg: &OptimizerConfig<T>,
    seed: u64,
) -> Result<OptResult<T>, TMetricError> {
    let d = rho.dim();
    let mut objective = FactorObjective::new(rho, sigma, fact.rank(d));
    let mut best: Option<(T, Vec<T>)> = None;
    let mut restart_values = Vec::with_capacity(cfg.restarts);
    let mut iterations = 0;
    for r in 0..cfg.restarts {
        let mut stream = rng::stream(seed, r as u64);
        let start = if r % 2 == 0 {
            random_pure::<T, _>(d, &mut stream)?.projector()
        } else {
            random_density::<T, _>(d, &mut stream)?
        };
        let out = search_from(&mut objective, fact, cfg, &start);
        iterations += out.iterations;
        restart_values.push(out.value);
        if best.as_ref().is_none_or(|(v, _)| out.value > *v) {
            best = Some((out.value, out.x));
        }
    }
    // The extreme eigenvectors of rho - sigma are feasible pure points that
    // attain the spectral metric; never report less than they give.
    let spectrum = eigh(
        &rho.hermitian()
            .difference(sigma.hermitian())
            .map_err(StateError::from)?,
    );
    for k in [0, d - 1] {
        let candidate = PureState::normalized(spectrum.vector(k))?.projector();
        let x = fact.pack(d, &fact.factor_of(&candidate));
        let mut v = vec![C::zero(); d * fact.rank(d)];
        fact.unpack(d, &x, &mut v);
        if let Some((a, b)) = objective.fidelities(&v) {
            let value = (a - b).abs();
            if best.as_ref().is_none_or(|(bv, _)| value > *bv) {
                best = Some((value, x));
            }
        }
    }
    let (_, x) = best.expect("at least one restart");
    let argmax_state = fact.state_of(d, &x);
    // Report the objective at the returned state itself.
    let mut v = vec![C::zero(); d * fact.rank(d)];
    fact.unpack(d, &x, &mut v);
    let (a, b) = objective
        .fidelities(&v)
        .ok_or(TMetricError::Config("optimizer ended on a degenerate factor"))?;
    let value = (a - b).abs();
    let restarts_agreeing = restart_values
        .iter()
        .filter(|&&rv| rv >= value - cfg.value_tolerance)
        .count();
    Ok(OptResult {
        value,
        argmax_state,
        converged: restarts_agreeing >= cfg.quorum(),
        iterations_used: iterations,
        restarts_agreeing,
        restart_values,
    })
}

/// Numeric `D_T` by multi-start local maximization over all states.
///
/// Restarts alternate between Haar-random pure and Hilbert-Schmidt random
/// mixed starting points, each drawn from its own stream of `cfg.seed`. Both
/// signs of `F(rho, tau) - F(sigma, tau)` are maximized separately from every
/// start. The search is `converged` when at least half of the restarts reach
/// the best value within `cfg.value_tolerance`.
pub fn t_metric_numeric<T: Scalar>(
    rho: &DensityMatrix<T>,
    sigma: &DensityMatrix<T>,
    cfg: &OptimizerConfig<T>,
) -> Result<OptResult<T>, TMetricError> {
    validate_pair(rho, sigma)?;
    cfg.check()?;
    if identical(rho, sigma) {
        return Ok(trivial_result(rho, cfg));
    }
    multistart(rho, sigma, Factorization::Cholesky, cfg, cfg.seed)
}

/// Independent route to `D_T`: unconstrained `d x k` factors for every rank
/// `k = 1..=d`, each with its own multi-start search. Returns the best rank's
/// result. Slower than [`t_metric_numeric`]; used to cross-check golden values.
pub fn t_metric_rank_sweep<T: Scalar>(
    rho: &DensityMatrix<T>,
    sigma: &DensityMatrix<T>,
    cfg: &OptimizerConfig<T>,
) -> Result<OptResult<T>, TMetricError> {
    validate_pair(rho, sigma)?;
    cfg.check()?;
    if identical(rho, sigma) {
        return Ok(trivial_result(rho, cfg));
    }
    let d = rho.dim();
    let mut best: Option<OptResult<T>> = None;
    for rank in 1..=d {
        let seed = rng::child_seed(cfg.seed ^ 0x5eed_0000_0000_0000, rank as u64);
        let res = multistart(rho, sigma, Factorization::Dense { rank }, cfg, seed)?;
        if best.as_ref().is_none_or(|b| res.value > b.value) {
            best = Some(res);
        }
    }
    Ok(best.expect("d >= 1"))
}

/// `|F(rho, tau) - F(sigma, tau)|` through the general fidelity routine.
pub fn objective<T: Scalar>(
    rho: &DensityMatrix<T>,
    sigma: &DensityMatrix<T>,
    tau: &DensityMatrix<T>,
) -> Result<T, TMetricError> {
    Ok((fidelity(rho, tau)? - fidelity(sigma, tau)?).abs())
}

/// Qubit closed form: `sqrt(1 - F(u, v))`.
pub fn t_metric_qubit<T: Scalar>(u: &BlochVector<T>, v: &BlochVector<T>) -> Result<T, TMetricError> {
    Ok(FidelityDistances::from_fidelity(fidelity_qubit(u, v)?).sine)
}

pub(crate) fn t_metric_qubit_states<T: Scalar>(
    rho: &DensityMatrix<T>,
    sigma: &DensityMatrix<T>,
) -> Result<T, FidelityError> {
    let u = to_bloch(rho)?;
    let v = to_bloch(sigma)?;
    Ok(FidelityDistances::from_fidelity(fidelity_qubit(&u, &v)?).sine)
}

/// Bloch vector of an optimal `tau` for a qubit pair.
///
/// The maximizer is parallel to `u - v` with length
/// `|u - v| / (2 sqrt(1 - F(u, v)))`, which never exceeds one.
pub fn optimal_tau_qubit<T: Scalar>(u: &BlochVector<T>, v: &BlochVector<T>) -> Result<BlochVector<T>, TMetricError> {
    let f = fidelity_qubit(u, v)?;
    let diff = u.sub(v);
    let gap = (T::one() - f).max(T::zero()).sqrt();
    if diff.norm().is_zero() || gap.is_zero() {
        return Err(TMetricError::IdenticalStates);
    }
    // The optimum aligns (w, sqrt(1 - |w|^2)) with (u - v, b), where
    // b = sqrt(1 - |u|^2) - sqrt(1 - |v|^2); for b < 0 that flips w.
    let b = u.purity_gap() - v.purity_gap();
    let sign = if b < T::zero() { -T::one() } else { T::one() };
    let w = diff.scale(sign / (T::lit(2.0) * gap));
    // roundoff can push |w| a hair past the sphere
    let len = w.norm();
    Ok(if len > T::one() { w.scale(T::one() / len) } else { w })
}

/// Qubit value of `max_tau |sqrt(1 + D) - sqrt(1 - D)|` with
/// `D = |F(rho, tau) - F(sigma, tau)|`. The map is increasing in `D`, so the
/// maximum sits at `D = D_T`; the result coincides with the Bures metric.
pub fn bures_equivalent_form<T: Scalar>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T, TMetricError> {
    validate_pair(rho, sigma)?;
    if rho.dim() != 2 {
        return Err(TMetricError::NotQubit(rho.dim()));
    }
    let dt = t_metric_qubit_states(rho, sigma)?;
    Ok(((T::one() + dt).sqrt() - (T::one() - dt).max(T::zero()).sqrt()).abs())
}

/// `sqrt(1 - F) - D_T` together with the optimizer result behind it.
#[derive(Debug, Clone)]
pub struct BoundGap<T> {
    pub gap: T,
    pub bound: T,
    pub result: OptResult<T>,
}

pub fn upper_bound_gap_detailed<T: Scalar>(
    rho: &DensityMatrix<T>,
    sigma: &DensityMatrix<T>,
    cfg: &OptimizerConfig<T>,
) -> Result<BoundGap<T>, TMetricError> {
    validate_pair(rho, sigma)?;
    if identical(rho, sigma) {
        let result = trivial_result(rho, cfg);
        return Ok(BoundGap {
            gap: T::zero(),
            bound: T::zero(),
            result,
        });
    }
    let bound = FidelityDistances::from_fidelity(fidelity(rho, sigma)?).sine;
    let result = t_metric_numeric(rho, sigma, cfg)?;
    Ok(BoundGap {
        gap: bound - result.value,
        bound,
        result,
    })
}

/// `sqrt(1 - F(rho, sigma)) - D_T(rho, sigma)`; non-negative up to roundoff.
pub fn upper_bound_gap<T: Scalar>(
    rho: &DensityMatrix<T>,
    sigma: &DensityMatrix<T>,
    cfg: &OptimizerConfig<T>,
) -> Result<T, TMetricError> {
    Ok(upper_bound_gap_detailed(rho, sigma, cfg)?.gap)
}

/// Gaussian factor sample, exposed for tests that need arbitrary `V`.
#[doc(hidden)]
pub fn random_factor<T: Scalar, R: rand::Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Matrix<T> {
    ginibre(d, k, rng)
}
