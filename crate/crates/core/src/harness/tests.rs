use super::*;

fn spec(kind: ExperimentKind, metric: MetricKind, dims: &[usize], trials: usize) -> ExperimentSpec {
    ExperimentSpec::new(kind, metric, dims.to_vec(), trials, 7)
}

fn without_time(mut r: ExperimentReport) -> ExperimentReport {
    r.wall_time_s = 0.0;
    r
}

#[test]
fn experiment_names_round_trip() {
    for k in ExperimentKind::ALL {
        assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
        let json = serde_json::to_string(&k).unwrap();
        assert_eq!(json, format!("\"{}\"", k.name()));
    }
    assert!("joint".parse::<ExperimentKind>().is_err());
}

#[test]
fn invalid_specs_are_rejected() {
    let mut s = spec(ExperimentKind::Axioms, MetricKind::SineMetric, &[2], 0);
    assert!(matches!(run_experiment(&s), Err(HarnessError::InvalidSpec(_))));
    s.trials = 1;
    s.dims = vec![];
    assert!(matches!(run_experiment(&s), Err(HarnessError::InvalidSpec(_))));
    s.dims = vec![1];
    assert!(matches!(run_experiment(&s), Err(HarnessError::InvalidSpec(_))));
    let t = spec(ExperimentKind::PtQubit, MetricKind::PtMetric, &[3], 1);
    assert!(matches!(run_experiment(&t), Err(HarnessError::InvalidSpec(_))));
    let a = spec(ExperimentKind::Axioms, MetricKind::SineMetric, &[2], 1);
    assert!(run_contractivity(&a).is_err());
}

#[test]
fn closed_form_experiments_pass() {
    let cases = [
        spec(ExperimentKind::Axioms, MetricKind::SineMetric, &[2, 4], 300),
        spec(ExperimentKind::Axioms, MetricKind::BuresAngle, &[3], 300),
        spec(ExperimentKind::Axioms, MetricKind::TMetric, &[2], 300),
        spec(ExperimentKind::Contractivity, MetricKind::TraceDistance, &[3], 300),
        spec(ExperimentKind::Contractivity, MetricKind::TMetric, &[2], 300),
        spec(ExperimentKind::JointConvexitySq, MetricKind::TMetric, &[2], 300),
        spec(ExperimentKind::JointConvexityRaw, MetricKind::TraceDistance, &[3], 300),
        spec(ExperimentKind::PtQubit, MetricKind::PtMetric, &[2], 300),
        spec(ExperimentKind::BuresForm, MetricKind::BuresMetric, &[2], 300),
    ];
    for s in cases {
        let r = run_experiment(&s).unwrap();
        assert_eq!(r.violations, 0, "{} {}: {:?}", s.experiment, s.metric, r.witness);
        assert_eq!(r.trials_run, s.trials * s.dims.len());
        assert_eq!(r.non_converged, 0);
        assert!(r.witness.is_none());
    }
}

#[test]
fn optimizer_backed_upper_bound_and_tmetric_qubit() {
    let r = run_experiment(&spec(ExperimentKind::UpperBound, MetricKind::TMetric, &[2, 3], 6)).unwrap();
    assert_eq!(r.violations, 0, "{:?}", r.witness);
    let qubit = &r.per_dim[0];
    let gap = qubit.gap.unwrap();
    assert!(gap.min.abs() <= 1e-6 && gap.max.abs() <= 1e-6);
    assert_eq!(qubit.argmax_ranks.as_ref().unwrap().iter().sum::<usize>(), 6);

    let r = run_experiment(&spec(ExperimentKind::TMetricQubit, MetricKind::TMetric, &[2], 10)).unwrap();
    assert_eq!(r.violations, 0, "{:?}", r.witness);
    assert_eq!(r.trials_run + r.skipped, 10);
}

#[test]
fn reports_are_deterministic() {
    let s = spec(ExperimentKind::Axioms, MetricKind::TraceDistance, &[2, 3], 200);
    let a = without_time(run_experiment(&s).unwrap());
    let b = without_time(run_experiment(&s).unwrap());
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.to_csv(), b.to_csv());
    let other = without_time(run_experiment(&ExperimentSpec { seed: 8, ..s }).unwrap());
    assert_ne!(a.to_json(), other.to_json());
}

#[test]
fn lambda_endpoints_are_sampled() {
    let s = spec(ExperimentKind::JointConvexitySq, MetricKind::TMetric, &[2], 3);
    let mut r0 = trial_stream(s.seed, 2, 0);
    let mut r1 = trial_stream(s.seed, 2, 1);
    assert_eq!(checks::sample(&s, 2, 0, &mut r0).unwrap().lambda, Some(0.0));
    assert_eq!(checks::sample(&s, 2, 1, &mut r1).unwrap().lambda, Some(1.0));
    let r = run_experiment(&s).unwrap();
    let endpoint = r.records.iter().find(|rec| rec.trial == 0).unwrap();
    assert_eq!(endpoint.excess, 0.0);
}

#[test]
fn raw_search_finds_a_replayable_witness() {
    let s = spec(ExperimentKind::JointConvexityRaw, MetricKind::TMetric, &[2], 2_000);
    let r = run_joint_convexity(&s, false).unwrap();
    assert!(r.violations >= 1);
    let w = r.witness.clone().unwrap();
    assert!(w.violation > 1e-6 && w.violation == r.max_violation);
    assert_eq!(w.inequality, "joint convexity");

    let parsed = ExperimentReport::from_json(&r.to_json()).unwrap();
    let w2 = parsed.witness.unwrap();
    assert_eq!(w2, w);
    assert_eq!(replay_witness(&parsed.spec, &w2).unwrap(), w.violation);
}

#[test]
fn replay_rejects_unknown_checks() {
    let s = spec(ExperimentKind::JointConvexityRaw, MetricKind::TMetric, &[2], 200);
    let mut w = run_experiment(&s).unwrap().witness.unwrap();
    w.inequality = "nothing".into();
    assert!(matches!(replay_witness(&s, &w), Err(HarnessError::UnknownCheck(_))));
}

#[test]
fn spectral_oracle_oracle_on_qubits() {
    let mut s = spec(ExperimentKind::SpectralOracle, MetricKind::PtMetric, &[2], 3);
    s.oracle_samples = 20_000;
    let r = run_identity_checks(&s).unwrap();
    assert_eq!(r.violations, 0, "{:?}", r.witness);
}

#[test]
fn csv_has_one_row_per_trial() {
    let s = spec(ExperimentKind::PtQubit, MetricKind::PtMetric, &[2], 25);
    let r = run_experiment(&s).unwrap();
    let csv = r.to_csv();
    assert_eq!(csv.lines().count(), 26);
    assert!(csv.starts_with("dim,trial,check,excess,tol,violated,skipped"));
}
