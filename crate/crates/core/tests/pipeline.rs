use conformal_stl::config::{ExperimentConfig, TrialsConfig};
use conformal_stl::dataset::{generate, load, save, Format, GeneratorConfig};
use conformal_stl::pipeline::{compute_metrics, run_experiment, run_trial, MinedPredicate, TrialSpec};

fn quick(cfg: &ExperimentConfig) -> TrialSpec {
    let mut spec = TrialSpec::from_config(cfg);
    spec.optimizer.iterations = 50;
    spec
}

#[test]
fn default_trial_covers_at_nominal_level() {
    let cfg = ExperimentConfig::default();
    let data = generate(&cfg.generator).unwrap();
    let out = run_trial(&data, &cfg.atom_set().unwrap(), &TrialSpec::from_config(&cfg), 1).unwrap();
    let m = &out.metrics;
    assert!((0.0..=0.2).contains(&m.error_rate_conformal), "{m:?}");
    assert!(m.error_rate_nonconformal.is_some());
    assert!(m.efficiency >= 0.0 && (0.0..=100.0).contains(&m.negative_percentage));
    assert!(m.exec_time_seconds > 0.0);
    assert_eq!(out.val.len(), 400);
}

#[test]
fn coverage_tracks_alpha_one_half() {
    let mut cfg = ExperimentConfig::default();
    cfg.cqr.alpha = 0.5;
    let data = generate(&cfg.generator).unwrap();
    let trials = TrialsConfig {
        n_trials: 20,
        master_seed: 4,
        ..Default::default()
    };
    let r = run_experiment("half", &data, &cfg.atom_set().unwrap(), &quick(&cfg), &trials).unwrap();
    let m = r.aggregate.error_rate_conformal.mean;
    assert!((m - 0.5).abs() <= 0.15, "mean conformal error {m}");
}

#[test]
fn nonnegative_intervals_have_zero_negative_percentage() {
    let cfg = ExperimentConfig::default();
    let data = generate(&GeneratorConfig {
        n_trajectories: 500,
        ..cfg.generator.clone()
    })
    .unwrap();
    let atoms = cfg.atom_set().unwrap();
    for seed in 0..5 {
        let out = run_trial(&data, &atoms, &quick(&cfg), seed).unwrap();
        let rows = out.predicate.predict_rows(&data, &out.val).unwrap();
        if rows.iter().all(|r| r.calibrated.l >= 0.0) {
            assert_eq!(out.metrics.negative_percentage, 0.0);
        }
    }
}

#[test]
fn stored_dataset_reproduces_the_trial() {
    let cfg = ExperimentConfig::default();
    let data = generate(&GeneratorConfig {
        n_trajectories: 300,
        ..cfg.generator.clone()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let atoms = cfg.atom_set().unwrap();
    let spec = quick(&cfg);
    let direct = run_trial(&data, &atoms, &spec, 8).unwrap();
    for (name, fmt) in [("d.jsonl", Format::Jsonl), ("d.csv", Format::Csv)] {
        let p = dir.path().join(name);
        save(&data, &p, fmt).unwrap();
        let back = load(&p, fmt).unwrap();
        assert_eq!(back.content_hash(), data.content_hash());
        let again = run_trial(&back, &atoms, &spec, 8).unwrap();
        assert_eq!(again.predicate.to_json().unwrap(), direct.predicate.to_json().unwrap());
    }
    let restored = MinedPredicate::from_json(&direct.predicate.to_json().unwrap()).unwrap();
    let m = compute_metrics(&restored, &data, &direct.val).unwrap();
    assert_eq!(m.error_rate_conformal, direct.metrics.error_rate_conformal);
}
