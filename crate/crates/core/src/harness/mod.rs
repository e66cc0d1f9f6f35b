//! Seeded Monte-Carlo experiments over random states and channels.
//!
//! Every trial owns a ChaCha stream derived from `(seed, dim, trial)`, so a
//! report depends only on its [`ExperimentSpec`] (wall time aside) and trials
//! may run in any order. Each trial produces a set of named checks
//! `excess > tol`; the trial that produced the reported maximum is persisted
//! as a [`Witness`] which [`replay_witness`] recomputes from its inputs alone.

mod checks;
mod search;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::ChannelError;
use crate::fidelity::FidelityError;
use crate::io::{ChannelJson, IoError, StateJson};
use crate::metrics::MetricKind;
use crate::rng;
use crate::states::StateError;
use crate::tmetric::TMetricError;
use crate::{DensityMatrix, KrausChannel, OptimizerConfig};

pub use checks::{Check, Evaluation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Axioms,
    Contractivity,
    JointConvexitySq,
    JointConvexityRaw,
    UpperBound,
    PtQubit,
    TMetricQubit,
    BuresForm,
    SpectralOracle,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        Self::Axioms,
        Self::Contractivity,
        Self::JointConvexitySq,
        Self::JointConvexityRaw,
        Self::UpperBound,
        Self::PtQubit,
        Self::TMetricQubit,
        Self::BuresForm,
        Self::SpectralOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Axioms => "axioms",
            Self::Contractivity => "contractivity",
            Self::JointConvexitySq => "joint_convexity_sq",
            Self::JointConvexityRaw => "joint_convexity_raw",
            Self::UpperBound => "upper_bound",
            Self::PtQubit => "pt_qubit",
            Self::TMetricQubit => "t_metric_qubit",
            Self::BuresForm => "bures_form",
            Self::SpectralOracle => "spectral_oracle",
        }
    }

    /// Experiments defined for qubits only.
    pub fn qubit_only(self) -> bool {
        matches!(self, Self::PtQubit | Self::TMetricQubit | Self::BuresForm)
    }

    /// Whether the chosen metric matters for this experiment.
    pub fn uses_metric(self) -> bool {
        matches!(
            self,
            Self::Axioms | Self::Contractivity | Self::JointConvexitySq | Self::JointConvexityRaw
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown experiment '{0}'")]
pub struct UnknownExperiment(pub String);

impl FromStr for ExperimentKind {
    type Err = UnknownExperiment;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| UnknownExperiment(s.to_string()))
    }
}

fn default_true() -> bool {
    true
}

fn default_oracle_samples() -> usize {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub experiment: ExperimentKind,
    pub metric: MetricKind,
    pub dims: Vec<usize>,
    /// Trials per dimension.
    pub trials: usize,
    pub seed: u64,
    /// Environment dimensions cycled over by contractivity trials.
    #[serde(default)]
    pub env_dims: Vec<usize>,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    /// Use `sqrt(1 - F)` for `D_T` at `d = 2` instead of the optimizer.
    #[serde(default = "default_true")]
    pub qubit_closed_form: bool,
    /// Haar samples per pair in the `spectral_oracle` oracle.
    #[serde(default = "default_oracle_samples")]
    pub oracle_samples: usize,
}

impl ExperimentSpec {
    pub fn new(experiment: ExperimentKind, metric: MetricKind, dims: Vec<usize>, trials: usize, seed: u64) -> Self {
        Self {
            experiment,
            metric,
            dims,
            trials,
            seed,
            env_dims: Vec::new(),
            optimizer: OptimizerConfig::default(),
            qubit_closed_form: true,
            oracle_samples: default_oracle_samples(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::InvalidSpec(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.dims.is_empty() {
            return bad("dims must not be empty".into());
        }
        if let Some(&d) = self.dims.iter().find(|&&d| d < 2) {
            return bad(format!("dimension {d} is below 2"));
        }
        if self.experiment.qubit_only() && self.dims.iter().any(|&d| d != 2) {
            return bad(format!("{} is defined for d = 2 only", self.experiment));
        }
        if self.env_dims.contains(&0) {
            return bad("environment dimensions must be at least 1".into());
        }
        if self.experiment == ExperimentKind::SpectralOracle && self.oracle_samples == 0 {
            return bad("oracle_samples must be at least 1".into());
        }
        self.optimizer.check()?;
        Ok(())
    }

    pub(crate) fn env_dims_or_default(&self) -> Vec<usize> {
        if self.env_dims.is_empty() {
            vec![1, 2, 4]
        } else {
            self.env_dims.clone()
        }
    }
}

/// Inputs of one trial, enough to recompute every check.
#[derive(Debug, Clone)]
pub struct TrialInputs {
    pub states: Vec<DensityMatrix>,
    pub channel: Option<KrausChannel>,
    pub lambda: Option<f64>,
    /// Seeds the optimizer runs and oracle sampling inside the trial.
    pub eval_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub dim: usize,
    pub trial: usize,
    pub states: Vec<StateJson>,
    pub channel: Option<ChannelJson>,
    pub lambda: Option<f64>,
    pub eval_seed: u64,
    /// Name of the check that produced `violation`.
    pub inequality: String,
    pub violation: f64,
}

impl Witness {
    fn new(dim: usize, trial: usize, inputs: &TrialInputs, check: &Check) -> Self {
        Self {
            dim,
            trial,
            states: inputs.states.iter().map(StateJson::from).collect(),
            channel: inputs.channel.as_ref().map(ChannelJson::from),
            lambda: inputs.lambda,
            eval_seed: inputs.eval_seed,
            inequality: check.name.to_string(),
            violation: check.excess,
        }
    }

    pub fn inputs(&self) -> Result<TrialInputs, HarnessError> {
        Ok(TrialInputs {
            states: self.states.iter().map(StateJson::to_state).collect::<Result<_, _>>()?,
            channel: self.channel.as_ref().map(ChannelJson::to_channel).transpose()?,
            lambda: self.lambda,
            eval_seed: self.eval_seed,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimSummary {
    pub dim: usize,
    pub trials_run: usize,
    pub violations: usize,
    pub non_converged: usize,
    pub max_violation: f64,
    /// `sqrt(1 - F) - D_T` over completed trials (`upper_bound` only).
    pub gap: Option<GapSummary>,
    /// Count of optimizer argmax states by rank; index 0 is rank 1.
    pub argmax_ranks: Option<Vec<usize>>,
}

/// One CSV row: the check with the largest `excess - tol` in a trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub dim: usize,
    pub trial: usize,
    pub check: &'static str,
    pub excess: f64,
    pub tol: f64,
    pub violated: bool,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    /// Trials whose checks were evaluated, over all dimensions.
    pub trials_run: usize,
    /// Trials excluded because an optimizer run they depend on did not converge.
    pub skipped: usize,
    pub violations: usize,
    /// Largest violating excess, or the largest excess seen when nothing
    /// violated its tolerance; 0 when no trial completed.
    pub max_violation: f64,
    pub witness: Option<Witness>,
    pub non_converged: usize,
    pub wall_time_s: f64,
    pub per_dim: Vec<DimSummary>,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        crate::io::to_pretty(self)
    }

    pub fn from_json(s: &str) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(s).map_err(IoError::from)?)
    }

    /// Per-trial rows `dim,trial,check,excess,tol,violated,skipped`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dim,trial,check,excess,tol,violated,skipped\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{:e},{:e},{},{}\n",
                r.dim, r.trial, r.check, r.excess, r.tol, r.violated, r.skipped
            ));
        }
        out
    }

    /// Fraction of trials whose optimizer runs did not all converge.
    pub fn non_converged_fraction(&self) -> f64 {
        let total = self.trials_run + self.skipped;
        if total == 0 {
            0.0
        } else {
            self.non_converged as f64 / total as f64
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error("witness check '{0}' does not exist for this experiment")]
    UnknownCheck(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Fidelity(#[from] FidelityError),
    #[error(transparent)]
    TMetric(#[from] TMetricError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Stream for trial `trial` at dimension `dim`.
pub(crate) fn trial_stream(seed: u64, dim: usize, trial: usize) -> rng::Stream {
    rng::stream(rng::child_seed(seed, dim as u64), trial as u64)
}

pub(crate) struct TrialOutcome {
    pub trial: usize,
    pub inputs: TrialInputs,
    pub eval: Evaluation,
}

pub(crate) fn run_trials(spec: &ExperimentSpec, dim: usize, count: usize) -> Result<Vec<TrialOutcome>, HarnessError> {
    (0..count)
        .into_par_iter()
        .map(|trial| {
            let mut stream = trial_stream(spec.seed, dim, trial);
            let mut inputs = checks::sample(spec, dim, trial, &mut stream)?;
            inputs.eval_seed = stream.random();
            let eval = checks::evaluate(spec, dim, trial, &inputs)?;
            Ok(TrialOutcome { trial, inputs, eval })
        })
        .collect()
}

/// Runs the experiment named in `spec` over all its dimensions.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport, HarnessError> {
    spec.validate()?;
    let start = Instant::now();
    let mut per_dim = Vec::with_capacity(spec.dims.len());
    let mut records = Vec::new();
    let mut best: Option<(bool, f64, Witness)> = None;
    for &dim in &spec.dims {
        let outcomes = if spec.experiment == ExperimentKind::JointConvexityRaw {
            search::counterexample_search(spec, dim)?
        } else {
            run_trials(spec, dim, spec.trials)?
        };
        per_dim.push(summarize(dim, &outcomes, &mut records, &mut best));
    }
    let sum = |f: fn(&DimSummary) -> usize| per_dim.iter().map(f).sum::<usize>();
    let trials_run = sum(|s| s.trials_run);
    let violations = sum(|s| s.violations);
    let non_converged = sum(|s| s.non_converged);
    let skipped = records.iter().filter(|r| r.skipped).count();
    let (max_violation, witness) = match best {
        Some((true, v, w)) => (v, Some(w)),
        Some((false, v, _)) => (v, None),
        None => (0.0, None),
    };
    Ok(ExperimentReport {
        spec: spec.clone(),
        trials_run,
        skipped,
        violations,
        max_violation,
        witness,
        non_converged,
        wall_time_s: start.elapsed().as_secs_f64(),
        per_dim,
        records,
    })
}

/// Folds one dimension's outcomes, in trial order, into a summary. `best`
/// tracks the report-wide maximum: violating checks rank above
/// non-violating ones, larger excess next, earlier dimension and trial last.
fn summarize(
    dim: usize,
    outcomes: &[TrialOutcome],
    records: &mut Vec<TrialRecord>,
    best: &mut Option<(bool, f64, Witness)>,
) -> DimSummary {
    let mut summary = DimSummary {
        dim,
        trials_run: 0,
        violations: 0,
        non_converged: 0,
        max_violation: f64::NEG_INFINITY,
        gap: None,
        argmax_ranks: None,
    };
    let mut gaps = Vec::new();
    let mut ranks: Vec<usize> = Vec::new();
    for o in outcomes {
        let e = &o.eval;
        if !e.converged {
            summary.non_converged += 1;
        }
        for &r in &e.argmax_ranks {
            if ranks.len() < r {
                ranks.resize(r, 0);
            }
            ranks[r - 1] += 1;
        }
        let worst = e
            .checks
            .iter()
            .max_by(|a, b| (a.excess - a.tol).total_cmp(&(b.excess - b.tol)))
            .cloned();
        if e.skipped {
            if let Some(c) = worst {
                records.push(TrialRecord {
                    dim,
                    trial: o.trial,
                    check: c.name,
                    excess: c.excess,
                    tol: c.tol,
                    violated: false,
                    skipped: true,
                });
            }
            continue;
        }
        summary.trials_run += 1;
        if let Some(g) = e.gap {
            gaps.push(g);
        }
        if e.checks.iter().any(Check::violated) {
            summary.violations += 1;
        }
        for c in &e.checks {
            let violated = c.violated();
            summary.max_violation = summary.max_violation.max(c.excess);
            let better = match best {
                None => true,
                Some((bv, bx, _)) => (violated, c.excess) > (*bv, *bx),
            };
            if better {
                *best = Some((violated, c.excess, Witness::new(dim, o.trial, &o.inputs, c)));
            }
        }
        if let Some(c) = worst {
            records.push(TrialRecord {
                dim,
                trial: o.trial,
                check: c.name,
                excess: c.excess,
                tol: c.tol,
                violated: c.violated(),
                skipped: false,
            });
        }
    }
    if !gaps.is_empty() {
        let n = gaps.len() as f64;
        summary.gap = Some(GapSummary {
            min: gaps.iter().copied().fold(f64::INFINITY, f64::min),
            mean: gaps.iter().sum::<f64>() / n,
            max: gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        });
    }
    if summary.max_violation == f64::NEG_INFINITY {
        summary.max_violation = 0.0;
    }
    if !ranks.is_empty() {
        summary.argmax_ranks = Some(ranks);
    }
    summary
}

/// Recomputes the witness' check from its persisted inputs and returns the
/// excess, which matches `witness.violation` exactly when nothing changed.
pub fn replay_witness(spec: &ExperimentSpec, witness: &Witness) -> Result<f64, HarnessError> {
    spec.validate()?;
    let inputs = witness.inputs()?;
    let eval = checks::evaluate(spec, witness.dim, witness.trial, &inputs)?;
    eval.checks
        .iter()
        .find(|c| c.name == witness.inequality)
        .map(|c| c.excess)
        .ok_or_else(|| HarnessError::UnknownCheck(witness.inequality.clone()))
}

fn expect_kind(spec: &ExperimentSpec, allowed: &[ExperimentKind]) -> Result<(), HarnessError> {
    if allowed.contains(&spec.experiment) {
        Ok(())
    } else {
        Err(HarnessError::InvalidSpec(format!(
            "experiment {} passed to the wrong runner",
            spec.experiment
        )))
    }
}

pub fn run_axioms(spec: &ExperimentSpec) -> Result<ExperimentReport, HarnessError> {
    expect_kind(spec, &[ExperimentKind::Axioms])?;
    run_experiment(spec)
}

pub fn run_contractivity(spec: &ExperimentSpec) -> Result<ExperimentReport, HarnessError> {
    expect_kind(spec, &[ExperimentKind::Contractivity])?;
    run_experiment(spec)
}

/// Joint convexity of the metric (`squared = false`, run as a counterexample
/// search) or of its square.
pub fn run_joint_convexity(spec: &ExperimentSpec, squared: bool) -> Result<ExperimentReport, HarnessError> {
    expect_kind(
        spec,
        &[ExperimentKind::JointConvexitySq, ExperimentKind::JointConvexityRaw],
    )?;
    let mut spec = spec.clone();
    spec.experiment = if squared {
        ExperimentKind::JointConvexitySq
    } else {
        ExperimentKind::JointConvexityRaw
    };
    run_experiment(&spec)
}

pub fn run_upper_bound(spec: &ExperimentSpec) -> Result<ExperimentReport, HarnessError> {
    expect_kind(spec, &[ExperimentKind::UpperBound])?;
    run_experiment(spec)
}

pub fn run_identity_checks(spec: &ExperimentSpec) -> Result<ExperimentReport, HarnessError> {
    expect_kind(
        spec,
        &[
            ExperimentKind::PtQubit,
            ExperimentKind::TMetricQubit,
            ExperimentKind::BuresForm,
            ExperimentKind::SpectralOracle,
        ],
    )?;
    run_experiment(spec)
}

#[cfg(test)]
mod tests;
