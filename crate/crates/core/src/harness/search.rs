//! Counterexample search for joint convexity: a random phase over the trial
//! budget, then hill climbing around the best candidate.

use rand::Rng;
use rand_distr::StandardNormal;

use super::checks::evaluate;
use super::{run_trials, trial_stream, ExperimentSpec, HarnessError, TrialInputs, TrialOutcome};
use crate::linalg::{psd_sqrt, HermitianMatrix, Matrix};
use crate::states::{complex_gaussian, DensityMatrix, StateError};

/// Share of the trial budget spent on refinement.
const REFINE_FRACTION: usize = 10;
const INITIAL_SCALE: f64 = 0.1;
const MIN_SCALE: f64 = 1e-4;
/// Failed proposals before the step shrinks.
const PATIENCE: usize = 20;
const SHRINK: f64 = 0.7;

fn excess(o: &TrialOutcome) -> f64 {
    if o.eval.skipped {
        return f64::NEG_INFINITY;
    }
    o.eval.checks.iter().map(|c| c.excess).fold(f64::NEG_INFINITY, f64::max)
}

/// `V V^dag / Tr` with `V = sqrt(rho) + t G`; moves in every direction,
/// including towards and away from the boundary.
fn perturb_state<R: Rng + ?Sized>(
    rho: &DensityMatrix<f64>,
    t: f64,
    rng: &mut R,
) -> Result<DensityMatrix<f64>, HarnessError> {
    let d = rho.dim();
    let root = psd_sqrt(rho.hermitian()).map_err(StateError::from)?;
    let v = Matrix::from_fn(d, d, |i, j| {
        root.as_matrix()[(i, j)] + complex_gaussian::<f64, R>(rng) * t
    });
    let g = &v * &v.adjoint();
    let tr = g.trace().re;
    let h = HermitianMatrix::from_hermitian_part(&g.scale(1.0 / tr));
    Ok(DensityMatrix::validate(h.into_matrix())?)
}

fn perturb<R: Rng + ?Sized>(x: &TrialInputs, t: f64, rng: &mut R) -> Result<TrialInputs, HarnessError> {
    let states = x
        .states
        .iter()
        .map(|s| perturb_state(s, t, rng))
        .collect::<Result<_, _>>()?;
    let lambda = x.lambda.map(|l| {
        let step: f64 = rng.sample(StandardNormal);
        (l + t * step).clamp(0.0, 1.0)
    });
    Ok(TrialInputs {
        states,
        channel: x.channel.clone(),
        lambda,
        eval_seed: rng.random(),
    })
}

/// Runs `trials - trials / 10` random trials, then spends the rest climbing
/// from the largest excess found. Refinement proposals are trials too and
/// are numbered after the random phase.
pub(crate) fn counterexample_search(spec: &ExperimentSpec, dim: usize) -> Result<Vec<TrialOutcome>, HarnessError> {
    let refine = spec.trials / REFINE_FRACTION;
    let coarse = spec.trials - refine;
    let mut outcomes = run_trials(spec, dim, coarse)?;
    let Some(start) = outcomes
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| excess(a).total_cmp(&excess(b)).then(ib.cmp(ia)))
        .map(|(i, _)| i)
    else {
        return Ok(outcomes);
    };
    let mut best_inputs = outcomes[start].inputs.clone();
    let mut best = excess(&outcomes[start]);
    let mut rng = trial_stream(spec.seed, dim, spec.trials);
    let mut scale = INITIAL_SCALE;
    let mut failures = 0;
    for k in 0..refine {
        let trial = coarse + k;
        let inputs = perturb(&best_inputs, scale, &mut rng)?;
        let eval = evaluate(spec, dim, trial, &inputs)?;
        let outcome = TrialOutcome { trial, inputs, eval };
        let value = excess(&outcome);
        if value > best {
            best = value;
            best_inputs = outcome.inputs.clone();
            failures = 0;
        } else {
            failures += 1;
            if failures >= PATIENCE {
                scale = (scale * SHRINK).max(MIN_SCALE);
                failures = 0;
            }
        }
        outcomes.push(outcome);
    }
    Ok(outcomes)
}
