use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_trial, TrialMetrics, TrialSpec};
use crate::config::TrialsConfig;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream};
use crate::stl::AtomSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub sexpr: String,
    /// Metrics with `exec_time_seconds` zeroed; the measured time lives in
    /// the unserialized field below.
    pub metrics: TrialMetrics,
    #[serde(skip)]
    pub exec_time_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub seed: u64,
    pub error: String,
}

/// Mean and twice the sample standard deviation; the latter is absent for
/// a single trial.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub two_sigma: Option<f64>,
}

impl MetricSummary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, two_sigma: None };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let two_sigma = (n > 1).then(|| {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            2.0 * var.sqrt()
        });
        Self { mean, two_sigma }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// Absent when any trial lacks the raw-interval error rate.
    pub error_rate_nonconformal: Option<MetricSummary>,
    pub error_rate_conformal: MetricSummary,
    pub efficiency: MetricSummary,
    /// Fraction of trials whose expression is constant.
    pub trivial_rate: f64,
    pub mean_l: MetricSummary,
    pub mean_h: MetricSummary,
    pub negative_percentage: MetricSummary,
}

pub fn aggregate(rows: &[TrialRow]) -> Aggregate {
    let col = |f: fn(&TrialMetrics) -> f64| -> MetricSummary {
        MetricSummary::of(&rows.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>())
    };
    let raw: Option<Vec<f64>> = rows.iter().map(|r| r.metrics.error_rate_nonconformal).collect();
    Aggregate {
        error_rate_nonconformal: raw.filter(|v| !v.is_empty()).map(|v| MetricSummary::of(&v)),
        error_rate_conformal: col(|m| m.error_rate_conformal),
        efficiency: col(|m| m.efficiency),
        trivial_rate: rows.iter().filter(|r| r.metrics.is_trivial).count() as f64 / rows.len().max(1) as f64,
        mean_l: col(|m| m.mean_l),
        mean_h: col(|m| m.mean_h),
        negative_percentage: col(|m| m.negative_percentage),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub label: String,
    pub spec: TrialSpec,
    pub n_trials: usize,
    pub master_seed: u64,
    pub dataset_hash: String,
    pub rows: Vec<TrialRow>,
    pub failures: Vec<TrialFailure>,
    pub aggregate: Aggregate,
    /// Wall time of the mine and conformalize stages. Not serialized, so
    /// that reports of identical runs compare equal byte for byte.
    #[serde(skip)]
    pub exec_time: MetricSummary,
}

/// Runs `trials.n_trials` independent trials in parallel. Trial `i` uses
/// the seed derived from `(master_seed, i)`, so the report does not depend
/// on scheduling.
pub fn run_experiment(
    label: &str,
    dataset: &Dataset,
    atoms: &AtomSet,
    spec: &TrialSpec,
    trials: &TrialsConfig,
) -> Result<ExperimentReport> {
    let n = trials.n_trials;
    if n == 0 {
        return Err(Error::invalid("n_trials must be at least 1"));
    }
    let results: Vec<(usize, u64, Result<TrialRow>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(trials.master_seed, &[stream::TRIAL, i as u64]);
            let row = run_trial(dataset, atoms, spec, seed).map(|o| TrialRow {
                trial: i,
                seed,
                sexpr: o.predicate.sexpr(),
                exec_time_seconds: o.metrics.exec_time_seconds,
                metrics: TrialMetrics {
                    exec_time_seconds: 0.0,
                    ..o.metrics
                },
            });
            (i, seed, row)
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (trial, seed, r) in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(TrialFailure {
                trial,
                seed,
                error: e.to_string(),
            }),
        }
    }
    if rows.is_empty() || failures.len() as f64 > trials.max_failure_fraction * n as f64 {
        return Err(Error::TooManyFailures {
            failed: failures.len(),
            total: n,
            first: failures.first().map(|f| f.error.clone()).unwrap_or_default(),
        });
    }
    let times: Vec<f64> = rows.iter().map(|r| r.exec_time_seconds).collect();
    Ok(ExperimentReport {
        label: label.to_string(),
        spec: spec.clone(),
        n_trials: n,
        master_seed: trials.master_seed,
        dataset_hash: dataset.content_hash(),
        aggregate: aggregate(&rows),
        rows,
        failures,
        exec_time: MetricSummary::of(&times),
    })
}

fn csv_err(e: csv::Error) -> Error {
    Error::invalid(format!("csv: {e}"))
}

/// One row per successful trial. Wall time is left out so that reruns
/// produce identical bytes; see [`write_timings_csv`].
pub fn write_trials_csv<W: Write>(reports: &[&ExperimentReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "config",
        "trial",
        "seed",
        "error_rate_nonconformal",
        "error_rate_conformal",
        "efficiency",
        "is_trivial",
        "mean_l",
        "mean_h",
        "negative_percentage",
        "expr",
    ])
    .map_err(csv_err)?;
    for rep in reports {
        for r in &rep.rows {
            let m = &r.metrics;
            w.write_record([
                rep.label.clone(),
                r.trial.to_string(),
                r.seed.to_string(),
                m.error_rate_nonconformal.map_or_else(|| "N/A".to_string(), |v| v.to_string()),
                m.error_rate_conformal.to_string(),
                m.efficiency.to_string(),
                m.is_trivial.to_string(),
                m.mean_l.to_string(),
                m.mean_h.to_string(),
                m.negative_percentage.to_string(),
                r.sexpr.clone(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io("<trials csv>", e))?;
    Ok(())
}

pub fn write_timings_csv<W: Write>(reports: &[&ExperimentReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["config", "trial", "exec_time_seconds"]).map_err(csv_err)?;
    for rep in reports {
        for r in &rep.rows {
            w.write_record([
                rep.label.clone(),
                r.trial.to_string(),
                r.exec_time_seconds.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io("<timings csv>", e))?;
    Ok(())
}
