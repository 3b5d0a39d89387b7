use super::*;
use crate::config::{default_atoms, TrialsConfig};
use crate::dataset::{generate, GeneratorConfig, SplitName, EVEN_SPLIT};
use crate::opt::Algorithm;

fn small_data(n: usize) -> Dataset {
    generate(&GeneratorConfig {
        n_trajectories: n,
        ..Default::default()
    })
    .unwrap()
}

fn quick_spec() -> TrialSpec {
    TrialSpec {
        alpha: 0.2,
        k: None,
        split: EVEN_SPLIT,
        loss: LossConfig::default(),
        optimizer: OptimizerConfig {
            iterations: 15,
            population: 30,
            ..Default::default()
        },
        use_intervals: true,
    }
}

fn atoms() -> AtomSet {
    AtomSet::new(default_atoms()).unwrap()
}

fn row(l: f64, h: f64, truth: f64) -> ValidationRow {
    let iv = RobustnessInterval::new(l, h).unwrap();
    ValidationRow {
        index: 0,
        raw: iv,
        calibrated: iv,
        truth,
    }
}

#[test]
fn metric_definitions() {
    let d = small_data(100);
    let mut p = run_trial(&d, &atoms(), &quick_spec(), 1).unwrap().predicate;

    let m = metrics_from_rows(&p, &[row(-1.0, 3.0, 1.0)], true).unwrap();
    assert_eq!(m.error_rate_conformal, 0.0);
    assert_eq!(m.negative_percentage, 25.0);

    let m = metrics_from_rows(&p, &[row(0.1, 0.3, 0.2), row(0.1, 0.3, 0.5)], false).unwrap();
    assert!((m.efficiency - 0.2).abs() < 1e-12);
    assert_eq!(m.error_rate_conformal, 0.5);
    assert_eq!(m.error_rate_nonconformal, None);
    assert_eq!(m.negative_percentage, 0.0);

    let m = metrics_from_rows(&p, &[row(-0.5, -0.5, 0.0), row(0.5, 0.5, 0.5)], true).unwrap();
    assert_eq!(m.negative_percentage, 50.0);

    p.expr = Expr::or([Expr::atom(0), Expr::not(Expr::atom(0))]);
    assert!(p.is_trivial());
    assert!(metrics_from_rows(&p, &[], true).is_err());
}

#[test]
fn raw_and_calibrated_rates_are_distinct() {
    let d = small_data(300);
    let out = run_trial(&d, &atoms(), &quick_spec(), 2).unwrap();
    let rows = out.predicate.predict_rows(&d, &out.val).unwrap();
    let raw_miss = rows.iter().filter(|r| !r.raw.contains(r.truth)).count() as f64 / rows.len() as f64;
    assert_eq!(out.metrics.error_rate_nonconformal, Some(raw_miss));
    for r in &rows {
        let q = out.predicate.adjustment.q;
        assert!((r.calibrated.l - (r.raw.l - q)).abs() < 1e-12 || r.calibrated.width() == 0.0);
    }
}

#[test]
fn mining_never_touches_cal2_or_val() {
    let d = small_data(200);
    let out = run_trial(&d, &atoms(), &quick_spec(), 3).unwrap();
    for (stage, part) in &out.access_log {
        if *stage == "atom_bank" || *stage == "optimize" {
            assert!(!matches!(part, SplitName::Cal2 | SplitName::Val), "{stage} read {part:?}");
        }
    }
    let conf: Vec<_> = out.access_log.iter().filter(|(s, _)| *s == "conformalize").map(|(_, p)| *p).collect();
    assert_eq!(conf, vec![SplitName::Train, SplitName::Cal2]);
}

#[test]
fn trial_is_deterministic_and_round_trips() {
    let d = small_data(200);
    let a = run_trial(&d, &atoms(), &quick_spec(), 4).unwrap();
    let b = run_trial(&d, &atoms(), &quick_spec(), 4).unwrap();
    let ja = a.predicate.to_json().unwrap();
    assert_eq!(ja, b.predicate.to_json().unwrap());
    let back = MinedPredicate::from_json(&ja).unwrap();
    assert_eq!(back.validation_indices(&d).unwrap(), a.val);
    assert_eq!(back, a.predicate);
    let again = compute_metrics(&back, &d, &a.val).unwrap();
    assert_eq!(
        TrialMetrics {
            exec_time_seconds: 0.0,
            ..a.metrics.clone()
        },
        again
    );
}

#[test]
fn stage_errors_are_tagged() {
    let d = small_data(200);
    let mut spec = quick_spec();
    spec.alpha = 0.01;
    let err = run_trial(&d, &atoms(), &spec, 5).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "atom_bank", .. }), "{err}");
    let mut spec = quick_spec();
    spec.optimizer.iterations = 0;
    let err = run_trial(&d, &atoms(), &spec, 5).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "optimize", .. }), "{err}");
}

#[test]
fn summaries() {
    let s = MetricSummary::of(&[1.0]);
    assert_eq!(s, MetricSummary { mean: 1.0, two_sigma: None });
    let s = MetricSummary::of(&[1.0, 3.0]);
    assert_eq!(s.mean, 2.0);
    assert!((s.two_sigma.unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn experiment_is_reproducible_and_aggregates_recompute() {
    let d = small_data(150);
    let trials = TrialsConfig {
        n_trials: 4,
        master_seed: 9,
        ..Default::default()
    };
    let mut spec = quick_spec();
    spec.optimizer.algorithm = Algorithm::CrossEntropy;
    let a = run_experiment("ce", &d, &atoms(), &spec, &trials).unwrap();
    let b = run_experiment("ce", &d, &atoms(), &spec, &trials).unwrap();
    assert_eq!(a.rows.len(), 4);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(aggregate(&a.rows), a.aggregate);
    let (mut ca, mut cb) = (Vec::new(), Vec::new());
    write_trials_csv(&[&a], &mut ca).unwrap();
    write_trials_csv(&[&b], &mut cb).unwrap();
    assert_eq!(ca, cb);
    assert_eq!(String::from_utf8(ca).unwrap().lines().count(), 5);
}

#[test]
fn failures_are_counted_or_abort() {
    let d = small_data(150);
    let mut spec = quick_spec();
    spec.alpha = 0.01;
    let trials = TrialsConfig {
        n_trials: 2,
        ..Default::default()
    };
    let err = run_experiment("x", &d, &atoms(), &spec, &trials).unwrap_err();
    assert!(matches!(err, Error::TooManyFailures { failed: 2, total: 2, .. }));
}
