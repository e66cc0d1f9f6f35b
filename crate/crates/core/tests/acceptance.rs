//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.
//!
//! `cargo test -p fidmetric --test acceptance`

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use fidmetric::fidelity::{fidelity, fidelity_pure, fidelity_qubit};
use fidmetric::harness::{replay_witness, run_experiment, ExperimentKind, ExperimentReport, ExperimentSpec};
use fidmetric::io;
use fidmetric::rng;
use fidmetric::states::{from_bloch, random_density, random_pure, random_unitary, to_bloch};
use fidmetric::tmetric::optimal_tau_qubit;
use fidmetric::{BlochVector, DensityMatrix, MetricKind, OptimizerConfig};

const SEED: u64 = 7;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn run(spec: &ExperimentSpec) -> ExperimentReport {
    run_experiment(spec).unwrap_or_else(|e| panic!("{} failed to run: {e}", spec.experiment))
}

fn spec(kind: ExperimentKind, metric: MetricKind, dims: &[usize], trials: usize) -> ExperimentSpec {
    ExperimentSpec::new(kind, metric, dims.to_vec(), trials, SEED)
}

fn numeric(mut s: ExperimentSpec) -> ExperimentSpec {
    s.qubit_closed_form = false;
    s
}

fn summary(r: &ExperimentReport) -> String {
    format!(
        "{} dims {:?}: {} run, {} skipped, {} violations, max excess {:.2e}",
        r.spec.metric, r.spec.dims, r.trials_run, r.skipped, r.violations, r.max_violation
    )
}

fn within(limit: Duration, start: Instant) -> (bool, String) {
    let t = start.elapsed();
    (t <= limit, format!("{:.1}s of {}s", t.as_secs_f64(), limit.as_secs()))
}

fn pt_qubit() -> Outcome {
    let start = Instant::now();
    let r = run(&spec(ExperimentKind::PtQubit, MetricKind::PtMetric, &[2], 10_000));
    let (fast, time) = within(Duration::from_secs(5), start);
    outcome(
        r.violations == 0 && r.trials_run == 10_000 && fast,
        format!("{}; {time}", summary(&r)),
    )
}

fn tmetric_qubit() -> Outcome {
    let start = Instant::now();
    let r = run(&numeric(spec(
        ExperimentKind::TMetricQubit,
        MetricKind::TMetric,
        &[2],
        1_000,
    )));
    let (fast, time) = within(Duration::from_secs(120), start);
    let converged = r.trials_run as f64 / (r.trials_run + r.skipped) as f64;
    outcome(
        r.violations == 0 && converged >= 0.99 && fast,
        format!("{}; converged {:.1}%; {time}", summary(&r), 100.0 * converged),
    )
}

fn qubit_objective(u: &BlochVector, v: &BlochVector, w: &BlochVector) -> f64 {
    (fidelity_qubit(u, w).unwrap() - fidelity_qubit(v, w).unwrap()).abs()
}

/// 100 radii x 100 polar x 100 azimuthal points.
fn grid_best(u: &BlochVector, v: &BlochVector) -> f64 {
    const N: usize = 100;
    let mut best = 0.0f64;
    for ir in 0..N {
        let r = ir as f64 / (N - 1) as f64;
        for it in 0..N {
            let ct = -1.0 + 2.0 * (it as f64 + 0.5) / N as f64;
            let st = (1.0 - ct * ct).sqrt();
            for ip in 0..N {
                let phi = 2.0 * PI * (ip as f64 + 0.5) / N as f64;
                let w = BlochVector::new(r * st * phi.cos(), r * st * phi.sin(), r * ct).unwrap();
                best = best.max(qubit_objective(u, v, &w));
            }
        }
    }
    best
}

fn optimal_tau_magnitude() -> Outcome {
    let start = Instant::now();
    let mut r = rng::stream(SEED, 3);
    let mut worst = f64::NEG_INFINITY;
    let mut worst_radius = 0.0f64;
    for _ in 0..100 {
        let u = to_bloch(&random_density::<f64, _>(2, &mut r).unwrap()).unwrap();
        let v = to_bloch(&random_density::<f64, _>(2, &mut r).unwrap()).unwrap();
        let w = optimal_tau_qubit(&u, &v).unwrap();
        let f = fidelity_qubit(&u, &v).unwrap();
        let radius = u.sub(&v).norm() / (2.0 * (1.0 - f).sqrt());
        worst_radius = worst_radius.max((w.norm() - radius).abs());
        worst = worst.max(grid_best(&u, &v) - qubit_objective(&u, &v, &w));
    }
    let (fast, time) = within(Duration::from_secs(120), start);
    outcome(
        worst <= 1e-6 && worst_radius <= 1e-12 && fast,
        format!("grid best minus derived optimum at most {worst:.2e}; radius error {worst_radius:.1e}; {time}"),
    )
}

fn spectral_oracle() -> Outcome {
    let r = run(&spec(
        ExperimentKind::SpectralOracle,
        MetricKind::SpectralMetric,
        &[2, 3],
        10,
    ));
    let mut failing = std::collections::BTreeMap::<&str, usize>::new();
    for rec in r.records.iter().filter(|rec| rec.violated) {
        *failing.entry(rec.check).or_default() += 1;
    }
    let per_dim: Vec<String> = r
        .per_dim
        .iter()
        .map(|d| format!("d={} {}/{} pairs violate", d.dim, d.violations, d.trials_run))
        .collect();
    outcome(
        r.violations == 0,
        format!("{}; {}; failing checks {failing:?}", per_dim.join(", "), summary(&r)),
    )
}

fn bures_form() -> Outcome {
    let r = run(&spec(ExperimentKind::BuresForm, MetricKind::BuresMetric, &[2], 10_000));
    outcome(r.violations == 0 && r.trials_run == 10_000, summary(&r))
}

fn upper_bound() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for d in [2, 3, 4, 5] {
        let start = Instant::now();
        let mut s = spec(ExperimentKind::UpperBound, MetricKind::TMetric, &[d], 1_000);
        if d >= 4 {
            s.optimizer = OptimizerConfig {
                restarts: 4,
                max_iterations: 500,
                ..OptimizerConfig::default()
            };
        }
        let r = run(&s);
        let gap = r.per_dim[0].gap.expect("gap summary");
        let below = gap.min >= -1e-8;
        let equal = d != 2 || (gap.min.abs() <= 1e-6 && gap.max.abs() <= 1e-6);
        pass &= below && equal && r.trials_run == 1_000;
        lines.push(format!(
            "d={d} gap [{:.2e}, {:.2e}] mean {:.2e}, {} non-converged, {:.0}s",
            gap.min,
            gap.max,
            gap.mean,
            r.non_converged,
            start.elapsed().as_secs_f64()
        ));
    }
    outcome(pass, lines.join("; "))
}

fn axioms() -> Outcome {
    let mut pass = true;
    let mut lines = Vec::new();
    for m in [
        MetricKind::SineMetric,
        MetricKind::BuresMetric,
        MetricKind::BuresAngle,
        MetricKind::TraceDistance,
        MetricKind::SpectralMetric,
        MetricKind::PtMetric,
    ] {
        let r = run(&spec(ExperimentKind::Axioms, m, &[2, 3, 4, 5], 10_000));
        pass &= r.violations == 0 && r.trials_run == 40_000;
        lines.push(format!("{m} {} violations", r.violations));
    }
    let r = run(&numeric(spec(
        ExperimentKind::Axioms,
        MetricKind::TMetric,
        &[2, 3],
        1_000,
    )));
    pass &= r.violations == 0;
    lines.push(summary(&r));
    outcome(pass, lines.join("; "))
}

fn contractivity() -> Outcome {
    let start = Instant::now();
    let mut qubit = spec(ExperimentKind::Contractivity, MetricKind::TMetric, &[2], 1_000);
    qubit.env_dims = vec![1, 2, 4];
    let a = run(&qubit);
    let mut qutrit = spec(ExperimentKind::Contractivity, MetricKind::TMetric, &[3], 200);
    qutrit.env_dims = vec![1, 2, 4];
    let b = run(&qutrit);
    let (fast, time) = within(Duration::from_secs(600), start);
    outcome(
        a.violations == 0 && b.violations == 0 && a.trials_run == 1_000 && fast,
        format!("{}; {}; {time}", summary(&a), summary(&b)),
    )
}

fn joint_convexity_squared() -> Outcome {
    let a = run(&spec(
        ExperimentKind::JointConvexitySq,
        MetricKind::TMetric,
        &[2],
        10_000,
    ));
    let b = run(&spec(ExperimentKind::JointConvexitySq, MetricKind::TMetric, &[3], 200));
    outcome(
        a.violations == 0 && b.violations == 0 && a.trials_run == 10_000,
        format!("{}; {}", summary(&a), summary(&b)),
    )
}

fn non_joint_convexity() -> Outcome {
    let r = run(&spec(
        ExperimentKind::JointConvexityRaw,
        MetricKind::TMetric,
        &[2],
        100_000,
    ));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    io::write_string(&path, &r.to_json()).unwrap();
    let loaded = ExperimentReport::from_json(&io::read_to_string(&path).unwrap()).unwrap();
    let Some(w) = loaded.witness else {
        return outcome(false, format!("no witness; {}", summary(&r)));
    };
    let replayed = replay_witness(&loaded.spec, &w).unwrap();
    outcome(
        w.violation > 1e-6 && replayed == w.violation,
        format!(
            "{} violations, witness trial {} excess {:.4e}, replayed {:.4e}",
            r.violations, w.trial, w.violation, replayed
        ),
    )
}

fn fidelity_paths() -> Outcome {
    let mut r = rng::stream(SEED, 11);
    let (mut paths, mut symmetry, mut invariance) = (0.0f64, 0.0f64, 0.0f64);
    let mut cases = 0;
    for k in 0..10_000 {
        let d = 2 + k % 4;
        let rho: DensityMatrix = random_density(d, &mut r).unwrap();
        let sigma: DensityMatrix = random_density(d, &mut r).unwrap();
        let psi = random_pure::<f64, _>(d, &mut r).unwrap();
        let f = fidelity(&rho, &psi.projector()).unwrap();
        paths = paths.max((f - fidelity_pure(&rho, &psi).unwrap()).abs());
        if d == 2 {
            let (u, v) = (to_bloch(&rho).unwrap(), to_bloch(&sigma).unwrap());
            let general = fidelity(&rho, &sigma).unwrap();
            paths = paths.max((general - fidelity_qubit(&u, &v).unwrap()).abs());
            let p = to_bloch(&psi.projector()).unwrap();
            paths = paths.max((f - fidelity_qubit(&u, &p).unwrap()).abs());
            let back = from_bloch(&u).unwrap();
            paths = paths.max((fidelity(&back, &sigma).unwrap() - general).abs());
        }
        cases += 1;
        let fs = fidelity(&rho, &sigma).unwrap();
        symmetry = symmetry.max((fs - fidelity(&sigma, &rho).unwrap()).abs());
        let u = random_unitary(d, &mut r).unwrap();
        invariance = invariance.max((fs - fidelity(&rho.conjugate_by(&u), &sigma.conjugate_by(&u)).unwrap()).abs());
    }
    outcome(
        paths <= 1e-9 && symmetry <= 1e-10 && invariance <= 1e-9,
        format!("{cases} cases; paths {paths:.1e}, symmetry {symmetry:.1e}, unitary {invariance:.1e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("pt metric on qubits", pt_qubit),
        ("numeric qubit T-metric and argmax", tmetric_qubit),
        ("optimal tau magnitude against grid oracle", optimal_tau_magnitude),
        ("pure-state oracle for the spectral metric", spectral_oracle),
        ("Bures equivalent form", bures_form),
        ("upper bound sqrt(1 - F)", upper_bound),
        ("metric axioms", axioms),
        ("contractivity of D_T", contractivity),
        ("joint convexity of D_T squared", joint_convexity_squared),
        ("non-joint-convexity witness for D_T", non_joint_convexity),
        ("fidelity path agreement", fidelity_paths),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        failed += usize::from(!o.pass);
        println!(
            "{} criterion {:>2} {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
