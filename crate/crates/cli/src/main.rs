use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use fidmetric::channels::random_channel;
use fidmetric::harness::{replay_witness, run_experiment, ExperimentKind, ExperimentReport, ExperimentSpec};
use fidmetric::io::{self, StateJson};
use fidmetric::states::{random_density, random_pure};
use fidmetric::tmetric::t_metric_numeric;
use fidmetric::{rng, DensityMatrix, KrausChannel, MetricKind, OptimizerConfig, PureState};

const EXIT_OK: u8 = 0;
const EXIT_INVALID: u8 = 1;
const EXIT_VIOLATION: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "fidmetric",
    version,
    about = "Fidelity-based distances between quantum states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct OptimizerArgs {
    /// Multi-start restarts for the numeric T-metric.
    #[arg(long)]
    optimizer_restarts: Option<usize>,
    /// Simplex iterations per local search.
    #[arg(long)]
    max_iterations: Option<usize>,
}

impl OptimizerArgs {
    fn config(&self, seed: u64) -> OptimizerConfig {
        let mut cfg = OptimizerConfig::default().with_seed(seed);
        if let Some(r) = self.optimizer_restarts {
            cfg.restarts = r;
        }
        if let Some(m) = self.max_iterations {
            cfg.max_iterations = m;
        }
        cfg
    }
}

#[derive(Subcommand)]
enum Command {
    /// Distance between two states given as JSON files.
    Compute {
        #[arg(long)]
        metric: MetricKind,
        #[arg(long = "state-a", value_name = "FILE")]
        state_a: Option<PathBuf>,
        #[arg(long = "state-b", value_name = "FILE")]
        state_b: Option<PathBuf>,
        /// The two state files, when not given with --state-a/--state-b.
        #[arg(value_name = "FILE", num_args = 0..=2)]
        files: Vec<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run the optimizer for qubits too.
        #[arg(long)]
        numeric: bool,
        /// Where to write the maximizing state of a numeric T-metric.
        #[arg(long, value_name = "FILE")]
        argmax_out: Option<PathBuf>,
        #[command(flatten)]
        optimizer: OptimizerArgs,
    },
    /// Run a seeded experiment and write its report.
    Verify {
        /// Experiment name, e.g. axioms, upper_bound, joint_convexity_raw.
        experiment: String,
        #[arg(long, default_value = "t_metric")]
        metric: MetricKind,
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        /// Trials per dimension.
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Environment dimensions for random channels.
        #[arg(long, value_delimiter = ',')]
        env_dims: Vec<usize>,
        /// Joint convexity of the squared distance.
        #[arg(long)]
        squared: bool,
        /// Run the optimizer for qubits instead of sqrt(1 - F).
        #[arg(long)]
        numeric_qubits: bool,
        /// Haar samples per pair for spectral_oracle.
        #[arg(long)]
        oracle_samples: Option<usize>,
        /// Largest tolerated fraction of non-converged trials.
        #[arg(long, default_value_t = 0.01)]
        max_non_converged: f64,
        /// Report path; stdout when absent.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Per-trial CSV path.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
        #[command(flatten)]
        optimizer: OptimizerArgs,
    },
    /// Recompute the witness stored in a report.
    Replay {
        #[arg(value_name = "REPORT")]
        report: PathBuf,
    },
    /// Print a random state, pure state or channel as JSON.
    Sample {
        #[arg(long)]
        kind: SampleKind,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Environment dimension of a sampled channel.
        #[arg(long, default_value_t = 2)]
        env_dim: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SampleKind {
    State,
    Pure,
    Channel,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INVALID } else { EXIT_OK });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Compute {
            metric,
            state_a,
            state_b,
            files,
            seed,
            numeric,
            argmax_out,
            optimizer,
        } => {
            let (a, b) = state_paths(state_a, state_b, files)?;
            let rho = read_state(&a)?;
            let sigma = read_state(&b)?;
            if rho.dim() != sigma.dim() {
                bail!("states have different dimensions ({} and {})", rho.dim(), sigma.dim());
            }
            if metric != MetricKind::TMetric || (rho.dim() == 2 && !numeric) {
                if argmax_out.is_some() {
                    bail!("--argmax-out needs the numeric T-metric");
                }
                let value = metric
                    .evaluate(&rho, &sigma)
                    .expect("closed form exists")
                    .context("cannot evaluate metric")?;
                println!("{value}");
                return Ok(EXIT_OK);
            }
            let res = t_metric_numeric(&rho, &sigma, &optimizer.config(seed))?;
            println!("{}", res.value);
            if let Some(path) = argmax_out {
                io::write_state(&path, &res.argmax_state)?;
                println!("{}", path.display());
            }
            if !res.converged {
                eprintln!(
                    "warning: optimizer did not converge ({} of {} restarts agree)",
                    res.restarts_agreeing,
                    res.restart_values.len()
                );
                return Ok(EXIT_NOT_CONVERGED);
            }
            Ok(EXIT_OK)
        }
        Command::Verify {
            experiment,
            metric,
            dims,
            trials,
            seed,
            env_dims,
            squared,
            numeric_qubits,
            oracle_samples,
            max_non_converged,
            out,
            csv,
            optimizer,
        } => {
            let kind = experiment_kind(&experiment, squared)?;
            let mut spec = ExperimentSpec::new(kind, metric, dims, trials, seed);
            spec.env_dims = env_dims;
            spec.qubit_closed_form = !numeric_qubits;
            spec.optimizer = optimizer.config(0);
            if let Some(n) = oracle_samples {
                spec.oracle_samples = n;
            }
            if !(0.0..=1.0).contains(&max_non_converged) {
                bail!("--max-non-converged must lie in [0, 1]");
            }
            let report = run_experiment(&spec)?;
            match &out {
                Some(path) => io::write_string(path, &report.to_json())?,
                None => println!("{}", report.to_json()),
            }
            if let Some(path) = &csv {
                io::write_string(path, &report.to_csv())?;
            }
            eprintln!(
                "{} {} dims={:?}: {} trials, {} skipped, {} violations, max violation {:e}, {} non-converged, {:.2}s",
                report.spec.experiment,
                report.spec.metric,
                report.spec.dims,
                report.trials_run,
                report.skipped,
                report.violations,
                report.max_violation,
                report.non_converged,
                report.wall_time_s
            );
            Ok(verdict(&report, max_non_converged))
        }
        Command::Replay { report } => {
            let text = io::read_to_string(&report)?;
            let report = ExperimentReport::from_json(&text).context("cannot parse report")?;
            let Some(witness) = &report.witness else {
                bail!("report has no witness");
            };
            let violation = replay_witness(&report.spec, witness)?;
            println!("{violation}");
            if violation == witness.violation {
                Ok(EXIT_OK)
            } else {
                eprintln!("stored violation was {}", witness.violation);
                Ok(EXIT_VIOLATION)
            }
        }
        Command::Sample {
            kind,
            dim,
            seed,
            env_dim,
        } => {
            let mut r = rng::stream(seed, 0);
            let text = match kind {
                SampleKind::State => {
                    let rho: DensityMatrix = random_density(dim, &mut r)?;
                    io::state_to_string(&rho)
                }
                SampleKind::Pure => {
                    let psi: PureState = random_pure(dim, &mut r)?;
                    io::pure_to_string(&psi)
                }
                SampleKind::Channel => {
                    let ch: KrausChannel = random_channel(dim, env_dim, &mut r)?;
                    io::channel_to_string(&ch)
                }
            };
            println!("{text}");
            Ok(EXIT_OK)
        }
    }
}

fn state_paths(a: Option<PathBuf>, b: Option<PathBuf>, mut files: Vec<PathBuf>) -> Result<(PathBuf, PathBuf)> {
    match (a, b) {
        (Some(a), Some(b)) if files.is_empty() => Ok((a, b)),
        (None, None) if files.len() == 2 => {
            let b = files.pop().expect("two files");
            let a = files.pop().expect("two files");
            Ok((a, b))
        }
        _ => bail!("give two states, either as --state-a/--state-b or as two positional files"),
    }
}

fn read_state(path: &Path) -> Result<DensityMatrix> {
    let text = io::read_to_string(path)?;
    let doc: StateJson =
        serde_json::from_str(&text).with_context(|| format!("{}: malformed state JSON", path.display()))?;
    doc.to_state()
        .with_context(|| format!("{}: not a valid state", path.display()))
}

fn experiment_kind(name: &str, squared: bool) -> Result<ExperimentKind> {
    if name == "joint_convexity" {
        return Ok(if squared {
            ExperimentKind::JointConvexitySq
        } else {
            ExperimentKind::JointConvexityRaw
        });
    }
    let kind: ExperimentKind = name.parse()?;
    if !squared {
        return Ok(kind);
    }
    match kind {
        ExperimentKind::JointConvexitySq | ExperimentKind::JointConvexityRaw => Ok(ExperimentKind::JointConvexitySq),
        _ => bail!("--squared applies to joint convexity only"),
    }
}

/// Raw joint convexity of the T-metric is a counterexample search: success
/// means a violation was found.
fn verdict(report: &ExperimentReport, max_non_converged: f64) -> u8 {
    let expected =
        report.spec.experiment == ExperimentKind::JointConvexityRaw && report.spec.metric == MetricKind::TMetric;
    if expected != (report.violations > 0) {
        return EXIT_VIOLATION;
    }
    if report.non_converged_fraction() > max_non_converged {
        return EXIT_NOT_CONVERGED;
    }
    EXIT_OK
}
