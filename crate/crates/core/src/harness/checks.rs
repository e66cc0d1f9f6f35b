//! Trial sampling and the checks each experiment evaluates.

use rand::Rng;

use super::{ExperimentKind, ExperimentSpec, HarnessError, TrialInputs};
use crate::channels::random_channel;
use crate::fidelity::fidelity;
use crate::linalg::eigh;
use crate::metrics::{pt_metric, spectral_metric, trace_distance, FidelityDistances, MetricKind};
use crate::rng;
use crate::states::{random_density, random_pure, to_bloch, StateError};
use crate::tmetric::{bures_equivalent_form, optimal_tau_qubit, t_metric_numeric, upper_bound_gap_detailed};
use crate::DensityMatrix;

/// Closed-form checks.
const TOL_CLOSED: f64 = 1e-9;
/// Optimizer-backed axioms and equalities.
const TOL_OPT: f64 = 2e-6;
/// Closed-form comparisons after a channel or a mixture.
const TOL_CLOSED_COMPOSED: f64 = 1e-8;
/// Optimizer-backed comparisons after a channel or a mixture.
const TOL_OPT_COMPOSED: f64 = 5e-6;
const TOL_UPPER_BOUND: f64 = 1e-8;
const TOL_QUBIT_EQUALITY: f64 = 1e-6;
const TOL_ARGMAX: f64 = 1e-5;
const TOL_ORACLE_REACH: f64 = 1e-3;

/// Weight of the second state in the perturbed pair used for M2.
const M2_PERTURBATION: f64 = 1e-3;
/// Optimizer-backed axiom trials check the perturbed pair only this often.
const M2_STRIDE_OPTIMIZER: usize = 10;

/// One inequality `excess <= tol`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub excess: f64,
    pub tol: f64,
}

impl Check {
    fn new(name: &'static str, excess: f64, tol: f64) -> Self {
        Self { name, excess, tol }
    }

    /// NaN counts as a violation.
    pub fn violated(&self) -> bool {
        !(self.excess <= self.tol)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Evaluation {
    pub checks: Vec<Check>,
    /// Every optimizer run in the trial converged.
    pub converged: bool,
    /// The trial is excluded from the counts.
    pub skipped: bool,
    pub gap: Option<f64>,
    pub argmax_ranks: Vec<usize>,
}

/// Either closed-form distance or numeric `D_T`, with per-call optimizer seeds.
struct Distance<'a> {
    spec: &'a ExperimentSpec,
    eval_seed: u64,
    calls: u64,
    converged: bool,
    ranks: Vec<usize>,
}

impl<'a> Distance<'a> {
    fn new(spec: &'a ExperimentSpec, eval_seed: u64) -> Self {
        Self {
            spec,
            eval_seed,
            calls: 0,
            converged: true,
            ranks: Vec::new(),
        }
    }

    fn numeric(&self, dim: usize) -> bool {
        self.spec.metric == MetricKind::TMetric && !(dim == 2 && self.spec.qubit_closed_form)
    }

    fn next_seed(&mut self) -> u64 {
        self.calls += 1;
        rng::child_seed(self.eval_seed, self.calls)
    }

    fn eval(&mut self, a: &DensityMatrix, b: &DensityMatrix) -> Result<f64, HarnessError> {
        if self.numeric(a.dim()) {
            let cfg = self.spec.optimizer.with_seed(self.next_seed());
            let r = t_metric_numeric(a, b, &cfg)?;
            self.converged &= r.converged;
            self.ranks.push(r.argmax_state.rank());
            return Ok(r.value);
        }
        match self.spec.metric.evaluate(a, b) {
            Some(v) => Ok(v?),
            None => unreachable!("every metric but numeric D_T has a closed form"),
        }
    }

    fn finish(self, checks: Vec<Check>) -> Evaluation {
        Evaluation {
            checks,
            converged: self.converged,
            skipped: !self.converged,
            gap: None,
            argmax_ranks: self.ranks,
        }
    }
}

/// Haar-pure or Hilbert-Schmidt state with equal odds; convexity checks
/// want both boundary and interior points.
pub(crate) fn pure_or_mixed<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<DensityMatrix, HarnessError> {
    Ok(if rng.random::<bool>() {
        random_pure(d, rng)?.projector()
    } else {
        random_density(d, rng)?
    })
}

fn states<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Vec<DensityMatrix>, HarnessError> {
    (0..n).map(|_| Ok(random_density(d, rng)?)).collect()
}

/// Draws the inputs of one trial. `eval_seed` is left at 0 for the caller.
pub(crate) fn sample<R: Rng + ?Sized>(
    spec: &ExperimentSpec,
    dim: usize,
    trial: usize,
    rng: &mut R,
) -> Result<TrialInputs, HarnessError> {
    let mut inputs = TrialInputs {
        states: Vec::new(),
        channel: None,
        lambda: None,
        eval_seed: 0,
    };
    match spec.experiment {
        ExperimentKind::Axioms => inputs.states = states(3, dim, rng)?,
        ExperimentKind::Contractivity => {
            inputs.states = states(2, dim, rng)?;
            let envs = spec.env_dims_or_default();
            inputs.channel = Some(random_channel(dim, envs[trial % envs.len()], rng)?);
        }
        ExperimentKind::JointConvexitySq | ExperimentKind::JointConvexityRaw => {
            inputs.states = (0..4).map(|_| pure_or_mixed(dim, rng)).collect::<Result<_, _>>()?;
            inputs.lambda = Some(match trial {
                0 => 0.0,
                1 => 1.0,
                _ => rng.random::<f64>(),
            });
        }
        ExperimentKind::UpperBound => {
            let rho = random_density(dim, rng)?;
            let sigma = if trial == 0 {
                rho.clone()
            } else {
                random_density(dim, rng)?
            };
            inputs.states = vec![rho, sigma];
        }
        ExperimentKind::PtQubit
        | ExperimentKind::TMetricQubit
        | ExperimentKind::BuresForm
        | ExperimentKind::SpectralOracle => inputs.states = states(2, dim, rng)?,
    }
    Ok(inputs)
}

fn expect_states(inputs: &TrialInputs, n: usize, dim: usize) -> Result<(), HarnessError> {
    if inputs.states.len() != n || inputs.states.iter().any(|s| s.dim() != dim) {
        return Err(HarnessError::InvalidSpec(format!(
            "trial needs {n} states of dimension {dim}, got {}",
            inputs.states.len()
        )));
    }
    Ok(())
}

/// Evaluates every check of one trial. Pure function of its arguments.
pub(crate) fn evaluate(
    spec: &ExperimentSpec,
    dim: usize,
    trial: usize,
    inputs: &TrialInputs,
) -> Result<Evaluation, HarnessError> {
    match spec.experiment {
        ExperimentKind::Axioms => axioms(spec, dim, trial, inputs),
        ExperimentKind::Contractivity => contractivity(spec, dim, inputs),
        ExperimentKind::JointConvexitySq => joint_convexity(spec, dim, inputs, true),
        ExperimentKind::JointConvexityRaw => joint_convexity(spec, dim, inputs, false),
        ExperimentKind::UpperBound => upper_bound(spec, dim, inputs),
        ExperimentKind::PtQubit => pt_qubit(dim, inputs),
        ExperimentKind::TMetricQubit => tmetric_qubit(spec, dim, inputs),
        ExperimentKind::BuresForm => bures_form(dim, inputs),
        ExperimentKind::SpectralOracle => spectral_oracle(spec, dim, inputs),
    }
}

fn axioms(spec: &ExperimentSpec, dim: usize, trial: usize, inputs: &TrialInputs) -> Result<Evaluation, HarnessError> {
    expect_states(inputs, 3, dim)?;
    let [rho, sigma, omega] = [&inputs.states[0], &inputs.states[1], &inputs.states[2]];
    let mut dist = Distance::new(spec, inputs.eval_seed);
    let numeric = dist.numeric(dim);
    let tol = if numeric { TOL_OPT } else { TOL_CLOSED };

    let d_rs = dist.eval(rho, sigma)?;
    let d_sr = dist.eval(sigma, rho)?;
    let d_ro = dist.eval(rho, omega)?;
    let d_so = dist.eval(sigma, omega)?;
    let d_rr = dist.eval(rho, rho)?;
    let mut checks = vec![
        Check::new("M1 nonnegativity", -d_rs, TOL_CLOSED),
        Check::new("M2 self-distance is zero", d_rr.abs(), tol),
        Check::new("M3 symmetry", (d_rs - d_sr).abs(), tol),
        Check::new("M4 triangle", d_rs - d_ro - d_so, tol),
    ];
    if !numeric || trial.is_multiple_of(M2_STRIDE_OPTIMIZER) {
        let near = DensityMatrix::mix(1.0 - M2_PERTURBATION, rho, omega)?;
        // Distinct states must be at positive distance: violated iff d == 0.
        checks.push(Check::new(
            "M2 distinct states are separated",
            -dist.eval(rho, &near)?,
            -f64::MIN_POSITIVE,
        ));
    }
    Ok(dist.finish(checks))
}

fn contractivity(spec: &ExperimentSpec, dim: usize, inputs: &TrialInputs) -> Result<Evaluation, HarnessError> {
    expect_states(inputs, 2, dim)?;
    let channel = inputs
        .channel
        .as_ref()
        .ok_or_else(|| HarnessError::InvalidSpec("contractivity trial without a channel".into()))?;
    let (rho, sigma) = (&inputs.states[0], &inputs.states[1]);
    let mut dist = Distance::new(spec, inputs.eval_seed);
    let tol = if dist.numeric(dim) {
        TOL_OPT_COMPOSED
    } else {
        TOL_CLOSED_COMPOSED
    };
    let before = dist.eval(rho, sigma)?;
    let after = dist.eval(&channel.apply(rho)?, &channel.apply(sigma)?)?;
    Ok(dist.finish(vec![Check::new("contractivity", after - before, tol)]))
}

fn joint_convexity(
    spec: &ExperimentSpec,
    dim: usize,
    inputs: &TrialInputs,
    squared: bool,
) -> Result<Evaluation, HarnessError> {
    expect_states(inputs, 4, dim)?;
    let lambda = inputs
        .lambda
        .ok_or_else(|| HarnessError::InvalidSpec("convexity trial without lambda".into()))?;
    let s = &inputs.states;
    let (rho1, rho2, sigma1, sigma2) = (&s[0], &s[1], &s[2], &s[3]);
    let rho = DensityMatrix::mix(lambda, rho1, rho2)?;
    let sigma = DensityMatrix::mix(lambda, sigma1, sigma2)?;
    let mut dist = Distance::new(spec, inputs.eval_seed);
    let tol = if dist.numeric(dim) {
        TOL_OPT_COMPOSED
    } else {
        TOL_CLOSED_COMPOSED
    };
    let f = |x: f64| if squared { x * x } else { x };
    let mixed = f(dist.eval(&rho, &sigma)?);
    let first = f(dist.eval(rho1, sigma1)?);
    let second = f(dist.eval(rho2, sigma2)?);
    let name = if squared {
        "joint convexity of the square"
    } else {
        "joint convexity"
    };
    let excess = mixed - (lambda * first + (1.0 - lambda) * second);
    Ok(dist.finish(vec![Check::new(name, excess, tol)]))
}

fn upper_bound(spec: &ExperimentSpec, dim: usize, inputs: &TrialInputs) -> Result<Evaluation, HarnessError> {
    expect_states(inputs, 2, dim)?;
    let cfg = spec.optimizer.with_seed(rng::child_seed(inputs.eval_seed, 1));
    let g = upper_bound_gap_detailed(&inputs.states[0], &inputs.states[1], &cfg)?;
    // The bound holds at every feasible tau, so it is checked whether or not
    // the search converged; the qubit equality needs the true maximum.
    let mut checks = vec![Check::new("upper bound sqrt(1 - F)", -g.gap, TOL_UPPER_BOUND)];
    if dim == 2 && g.result.converged {
        checks.push(Check::new(
            "qubit equality with sqrt(1 - F)",
            g.gap.abs(),
            TOL_QUBIT_EQUALITY,
        ));
    }
    Ok(Evaluation {
        checks,
        converged: g.result.converged,
        skipped: false,
        gap: Some(g.gap),
        argmax_ranks: vec![g.result.argmax_state.rank()],
    })
}

fn closed(checks: Vec<Check>) -> Evaluation {
    Evaluation {
        checks,
        converged: true,
        ..Evaluation::default()
    }
}

fn pt_qubit(dim: usize, inputs: &TrialInputs) -> Result<Evaluation, HarnessError> {
    expect_states(inputs, 2, dim)?;
    let (rho, sigma) = (&inputs.states[0], &inputs.states[1]);
    let (u, v) = (to_bloch(rho)?, to_bloch(sigma)?);
    let pt = pt_metric(rho, sigma)?;
    Ok(closed(vec![
        Check::new(
            "pt metric equals |u - v| / 2",
            (pt - 0.5 * u.sub(&v).norm()).abs(),
            TOL_CLOSED,
        ),
        Check::new(
            "pt metric equals trace distance",
            (pt - trace_distance(rho, sigma)?).abs(),
            TOL_CLOSED,
        ),
    ]))
}

fn tmetric_qubit(spec: &ExperimentSpec, dim: usize, inputs: &TrialInputs) -> Result<Evaluation, HarnessError> {
    expect_states(inputs, 2, dim)?;
    let (rho, sigma) = (&inputs.states[0], &inputs.states[1]);
    let cfg = spec.optimizer.with_seed(rng::child_seed(inputs.eval_seed, 1));
    let r = t_metric_numeric(rho, sigma, &cfg)?;
    let sine = FidelityDistances::from_fidelity(fidelity(rho, sigma)?).sine;
    let (u, v) = (to_bloch(rho)?, to_bloch(sigma)?);
    let w = to_bloch(&r.argmax_state)?;
    let diff = u.sub(&v);
    let cross = w.scale(1.0 / w.norm()).cross(&diff.scale(1.0 / diff.norm())).norm();
    let best = optimal_tau_qubit(&u, &v)?;
    Ok(Evaluation {
        checks: vec![
            Check::new(
                "numeric D_T equals sqrt(1 - F)",
                (r.value - sine).abs(),
                TOL_QUBIT_EQUALITY,
            ),
            Check::new("argmax Bloch vector parallel to u - v", cross, TOL_ARGMAX),
            Check::new(
                "argmax Bloch radius matches optimal tau",
                (w.norm() - best.norm()).abs(),
                TOL_ARGMAX,
            ),
        ],
        converged: r.converged,
        skipped: !r.converged,
        gap: None,
        argmax_ranks: vec![r.argmax_state.rank()],
    })
}

fn bures_form(dim: usize, inputs: &TrialInputs) -> Result<Evaluation, HarnessError> {
    expect_states(inputs, 2, dim)?;
    let (rho, sigma) = (&inputs.states[0], &inputs.states[1]);
    let f = fidelity(rho, sigma)?;
    let bures = (2.0 - 2.0 * f.sqrt()).max(0.0).sqrt();
    let form = bures_equivalent_form(rho, sigma)?;
    Ok(closed(vec![Check::new(
        "equivalent form equals Bures metric",
        (form - bures).abs(),
        TOL_CLOSED,
    )]))
}

fn spectral_oracle(spec: &ExperimentSpec, dim: usize, inputs: &TrialInputs) -> Result<Evaluation, HarnessError> {
    expect_states(inputs, 2, dim)?;
    let (rho, sigma) = (&inputs.states[0], &inputs.states[1]);
    let diff = rho
        .hermitian()
        .difference(sigma.hermitian())
        .map_err(StateError::from)?;
    let spectral = spectral_metric(rho, sigma)?;
    let mut stream = rng::stream(inputs.eval_seed, 0);
    let mut sampled = 0.0f64;
    for _ in 0..spec.oracle_samples {
        let tau = random_pure::<f64, _>(dim, &mut stream)?;
        sampled = sampled.max(diff.expectation(tau.amplitudes()).abs());
    }
    let e = eigh(&diff);
    let extreme = if e.values[0].abs() > e.values[dim - 1].abs() {
        0
    } else {
        dim - 1
    };
    let attained = diff.expectation(&e.vector(extreme)).abs();
    Ok(closed(vec![
        Check::new(
            "sampled maximum does not exceed spectral metric",
            sampled - spectral,
            TOL_CLOSED,
        ),
        Check::new(
            "sampled maximum reaches spectral metric",
            spectral - sampled,
            TOL_ORACLE_REACH,
        ),
        Check::new(
            "extreme eigenvector attains spectral metric",
            (attained - spectral).abs(),
            TOL_CLOSED,
        ),
    ]))
}
