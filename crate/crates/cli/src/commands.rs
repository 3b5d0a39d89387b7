use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use conformal_stl::config::ExperimentConfig;
use conformal_stl::dataset::{generate, load_or, save, Dataset, Format};
use conformal_stl::opt::{write_convergence_csv, Algorithm, LossKind};
use conformal_stl::pipeline::{
    compute_metrics, run_experiment, run_trial, write_timings_csv, write_trials_csv, ExperimentReport,
    MinedPredicate, TrialMetrics, TrialSpec,
};
use conformal_stl::rng::{derive_seed, rng_from, stream};
use conformal_stl::stl::pretty_tree;
use rand::seq::index::sample;

use crate::args::{Ablation, Cli, Command, EvalArgs, GenArgs, MineArgs, PlotArgs, RunArgs, TrialsArgs};
use crate::output::{results_table, write_atomic};

pub fn run(cli: Cli) -> Result<()> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Gen(a) => gen(config, a),
        Command::Mine(a) => mine(config, a),
        Command::Trials(a) => trials(config, a),
        Command::Plotdata(a) => plotdata(config, a),
        Command::Eval(a) => eval(config, a),
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    Ok(match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    })
}

fn apply_run_args(cfg: &mut ExperimentConfig, a: &RunArgs) {
    if let Some(d) = &a.data {
        cfg.io.data = Some(d.clone());
    }
    if let Some(v) = a.alpha {
        cfg.cqr.alpha = v;
    }
    if a.k.is_some() {
        cfg.cqr.k = a.k;
    }
    if let Some(v) = a.loss {
        cfg.loss.kind = LossKind::from(v);
    }
    macro_rules! set {
        ($($src:ident => $dst:expr),* $(,)?) => {
            $(if let Some(v) = a.$src { $dst = v; })*
        };
    }
    set!(
        beta => cfg.loss.beta,
        w => cfg.loss.w,
        a1 => cfg.loss.a1,
        a2 => cfg.loss.a2,
        iterations => cfg.optimizer.iterations,
        samples => cfg.optimizer.samples,
        population => cfg.optimizer.population,
        max_depth => cfg.optimizer.max_depth,
        seed => cfg.trials.master_seed,
    );
}

fn load_dataset(path: &Path, cfg: &ExperimentConfig) -> Result<Dataset> {
    let fmt = Format::from_path(path)?;
    load_or(path, fmt, cfg.generator.observation_spec()).with_context(|| format!("loading {}", path.display()))
}

fn dataset_for(cfg: &ExperimentConfig) -> Result<Dataset> {
    match &cfg.io.data {
        Some(p) => load_dataset(p, cfg),
        None => Ok(generate(&cfg.generator)?),
    }
}

fn describe(d: &Dataset) -> String {
    let m = d.meta();
    format!("N={} T={} dimension={} observed={}", d.len(), m.t_len, m.dim, m.t_obs)
}

fn gen(config: Option<&Path>, a: GenArgs) -> Result<()> {
    let mut cfg = load_config(config)?;
    let g = &mut cfg.generator;
    if let Some(v) = a.n {
        g.n_trajectories = v;
    }
    if let Some(v) = a.waypoints {
        g.waypoints = v;
    }
    if let Some(v) = a.seed {
        g.seed = v;
    }
    if let Some(v) = a.noise {
        g.noise_std = v;
    }
    if let Some(v) = a.fraction {
        g.observation_fraction = v;
    }
    cfg.validate()?;
    let fmt = Format::from_path(&a.out)?;
    let data = generate(&cfg.generator)?;

    let mut tmp = a.out.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    save(&data, &tmp, fmt)?;
    let sidecar = |p: &Path| {
        let mut s = p.as_os_str().to_owned();
        s.push(".meta.json");
        PathBuf::from(s)
    };
    fs::rename(sidecar(&tmp), sidecar(&a.out)).context("moving metadata into place")?;
    fs::rename(&tmp, &a.out).with_context(|| format!("moving {} into place", a.out.display()))?;
    println!("wrote {} ({})", a.out.display(), describe(&data));
    Ok(())
}

fn metrics_line(m: &TrialMetrics) -> String {
    let raw = m
        .error_rate_nonconformal
        .map_or_else(|| "N/A".to_string(), |v| format!("{v:.4}"));
    format!(
        "error_rate_nonconformal={raw} error_rate_conformal={:.4} efficiency={:.4} is_trivial={} \
         mean_l={:.4} mean_h={:.4} negative_percentage={:.2} exec_time_seconds={:.3}",
        m.error_rate_conformal,
        m.efficiency,
        m.is_trivial,
        m.mean_l,
        m.mean_h,
        m.negative_percentage,
        m.exec_time_seconds
    )
}

fn mine(config: Option<&Path>, a: MineArgs) -> Result<()> {
    let mut cfg = load_config(config)?;
    apply_run_args(&mut cfg, &a.run);
    if let Some(o) = a.optimizer {
        cfg.optimizer.algorithm = Algorithm::from(o);
    }
    cfg.validate()?;
    let atoms = cfg.atom_set()?;
    let data = dataset_for(&cfg)?;
    let mut spec = TrialSpec::from_config(&cfg);
    spec.use_intervals = !a.no_intervals;
    // Same seed as trial 0 of an experiment with this master seed.
    let seed = derive_seed(cfg.trials.master_seed, &[stream::TRIAL, 0]);
    let mut out = run_trial(&data, &atoms, &spec, seed)?;
    out.predicate.provenance.config = Some(cfg.to_toml());

    write_atomic(&a.out, (out.predicate.to_json()? + "\n").as_bytes())?;
    if let Some(log) = &a.log {
        let mut buf = Vec::new();
        write_convergence_csv(&out.convergence, &mut buf)?;
        write_atomic(log, &buf)?;
    }
    println!("{}", pretty_tree(&out.predicate.expr, &atoms));
    println!("expr: {}", out.predicate.sexpr());
    println!("q = {:.6} (alpha = {}, n_cal = {})", out.predicate.adjustment.q, out.predicate.alpha, out.predicate.adjustment.n);
    println!("{}", metrics_line(&out.metrics));
    Ok(())
}

struct Variant {
    label: String,
    name: String,
    spec: TrialSpec,
}

fn variants(cfg: &ExperimentConfig, a: &TrialsArgs) -> Vec<Variant> {
    let base = TrialSpec::from_config(cfg);
    let mut out = Vec::new();
    for &o in &a.optimizers {
        let alg = Algorithm::from(o);
        let mut spec = base.clone();
        spec.optimizer.algorithm = alg;
        out.push(Variant {
            label: alg.short().to_string(),
            name: alg.display_name().to_string(),
            spec,
        });
    }
    for &ab in &a.ablations {
        let mut spec = base.clone();
        let (label, name) = match ab {
            Ablation::Telex => {
                spec.loss.kind = LossKind::Telex;
                ("telex", "TeLEx loss")
            }
            Ablation::Linear => {
                spec.loss.kind = LossKind::Linear;
                ("linear", "Linear loss")
            }
            Ablation::NoTrivial => {
                spec.loss.a2 = 0.0;
                ("no-trivial", "No p_trivial")
            }
            Ablation::NoIntervals => {
                spec.use_intervals = false;
                ("no-intervals", "No intervals")
            }
        };
        out.push(Variant {
            label: label.to_string(),
            name: name.to_string(),
            spec,
        });
    }
    if out.is_empty() {
        let alg = base.optimizer.algorithm;
        out.push(Variant {
            label: alg.short().to_string(),
            name: alg.display_name().to_string(),
            spec: base,
        });
    }
    out
}

fn trials(config: Option<&Path>, a: TrialsArgs) -> Result<()> {
    let mut cfg = load_config(config)?;
    apply_run_args(&mut cfg, &a.run);
    if let Some(n) = a.n {
        cfg.trials.n_trials = n;
    }
    cfg.validate()?;
    let atoms = cfg.atom_set()?;
    let data = dataset_for(&cfg)?;
    eprintln!("dataset: {}", describe(&data));

    let mut reports: Vec<(Variant, ExperimentReport)> = Vec::new();
    for v in variants(&cfg, &a) {
        eprintln!("running {} x {}", v.label, cfg.trials.n_trials);
        let r = run_experiment(&v.label, &data, &atoms, &v.spec, &cfg.trials)
            .with_context(|| format!("configuration {}", v.label))?;
        if !r.failures.is_empty() {
            eprintln!("{}: {} trial(s) failed and were excluded", v.label, r.failures.len());
        }
        reports.push((v, r));
    }

    let refs: Vec<&ExperimentReport> = reports.iter().map(|(_, r)| r).collect();
    let mut csv = Vec::new();
    write_trials_csv(&refs, &mut csv)?;
    let mut timings = Vec::new();
    write_timings_csv(&refs, &mut timings)?;
    let blocks: Vec<serde_json::Value> = reports
        .iter()
        .map(|(v, r)| {
            serde_json::json!({
                "label": r.label,
                "name": v.name,
                "n_trials": r.n_trials,
                "successful": r.rows.len(),
                "failures": r.failures,
                "master_seed": r.master_seed,
                "dataset_hash": r.dataset_hash,
                "aggregate": r.aggregate,
                "spec": r.spec,
            })
        })
        .collect();
    let json = serde_json::to_string_pretty(&serde_json::json!({
        "config": cfg.to_toml(),
        "reports": blocks,
    }))?;
    write_atomic(&a.out_dir.join("trials.csv"), &csv)?;
    write_atomic(&a.out_dir.join("timings.csv"), &timings)?;
    write_atomic(&a.out_dir.join("aggregate.json"), (json + "\n").as_bytes())?;

    let rows: Vec<(String, &ExperimentReport)> = reports.iter().map(|(v, r)| (v.name.clone(), r)).collect();
    print!("{}", results_table(&rows));
    Ok(())
}

fn load_predicate(path: &Path) -> Result<MinedPredicate> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    MinedPredicate::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

/// The predicate's validation split when the dataset is the one it was
/// mined on; otherwise every trajectory.
fn scoring_indices(pred: &MinedPredicate, data: &Dataset, all: bool) -> Result<Vec<usize>> {
    if all || pred.provenance.dataset_hash != data.content_hash() {
        if !all {
            eprintln!("note: dataset differs from the one the predicate was mined on; scoring all trajectories");
        }
        return Ok((0..data.len()).collect());
    }
    Ok(pred.validation_indices(data)?)
}

fn plotdata(config: Option<&Path>, a: PlotArgs) -> Result<()> {
    let cfg = load_config(config)?;
    let pred = load_predicate(&a.predicate)?;
    let data = load_dataset(&a.data, &cfg)?;
    let pool = scoring_indices(&pred, &data, false)?;
    if a.samples == 0 || a.samples > pool.len() {
        bail!("--samples must lie in [1, {}], got {}", pool.len(), a.samples);
    }
    let mut rng = rng_from(a.seed, &[stream::PLOT]);
    let mut picked: Vec<usize> = sample(&mut rng, pool.len(), a.samples).into_iter().map(|i| pool[i]).collect();
    picked.sort_unstable();
    let rows = pred.predict_rows(&data, &picked)?;

    let mut out = String::from("sample_index,l,h,true_robustness,covered\n");
    for r in &rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.index,
            r.calibrated.l,
            r.calibrated.h,
            r.truth,
            r.calibrated.contains(r.truth)
        ));
    }
    match &a.out {
        Some(p) => write_atomic(p, out.as_bytes())?,
        None => print!("{out}"),
    }
    Ok(())
}

fn eval(config: Option<&Path>, a: EvalArgs) -> Result<()> {
    let cfg = load_config(config)?;
    let pred = load_predicate(&a.predicate)?;
    let data = load_dataset(&a.data, &cfg)?;
    let idx = scoring_indices(&pred, &data, a.all)?;
    let m = compute_metrics(&pred, &data, &idx)?;
    if let Some(p) = &a.out {
        write_atomic(p, (serde_json::to_string_pretty(&m)? + "\n").as_bytes())?;
    }
    println!("expr: {}", pred.sexpr());
    println!("scored {} trajectories", idx.len());
    println!("{}", metrics_line(&m));
    Ok(())
}
