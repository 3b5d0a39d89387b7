//! One trial of the full mining pipeline and multi-trial experiments.
//!
//! A trial splits the data five ways, fits the atom bank on `train` and
//! calibrates it on `cal1`, mines an expression against the bank's `test`
//! intervals, refits and recalibrates a predictor for the mined expression
//! on `train` and `cal2`, and scores it on `val`.

mod experiment;
mod trial;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cqr::{widen, ConformalAdjustment, KnnIndex, QuantilePredictor};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::interval::RobustnessInterval;
use crate::rng::{derive_seed, stream};
use crate::opt::{LossConfig, OptimizerConfig};
use crate::stl::{parse_sexpr, robustness, simplify_cnf, to_sexpr, truth_table, AtomSet, Expr, MAX_TRUTH_TABLE_ATOMS};

pub use experiment::{
    aggregate, run_experiment, write_timings_csv, write_trials_csv, Aggregate, ExperimentReport, MetricSummary,
    TrialFailure, TrialRow,
};
pub use trial::{run_trial, TrialOutcome, TrialSpec, STAGES};

/// Where a mined predicate came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub dataset_hash: String,
    pub split: [f64; 5],
    pub loss: LossConfig,
    pub optimizer: OptimizerConfig,
    pub use_intervals: bool,
    /// Objective value of the mined expression during optimization.
    pub mined_loss: f64,
    /// Experiment configuration the trial was launched from, as TOML.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct PredicateRecord {
    sexpr: String,
    atoms: AtomSet,
    alpha: f64,
    k: usize,
    adjustment: ConformalAdjustment,
    index: Arc<KnnIndex>,
    train_labels: Vec<f64>,
    provenance: Provenance,
}

/// A mined expression with its final calibrated interval predictor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PredicateRecord", into = "PredicateRecord")]
pub struct MinedPredicate {
    pub expr: Expr,
    pub atoms: AtomSet,
    pub alpha: f64,
    pub k: usize,
    pub adjustment: ConformalAdjustment,
    index: Arc<KnnIndex>,
    train_labels: Vec<f64>,
    pub provenance: Provenance,
}

impl TryFrom<PredicateRecord> for MinedPredicate {
    type Error = Error;

    fn try_from(r: PredicateRecord) -> Result<Self> {
        let expr = parse_sexpr(&r.sexpr, &r.atoms)?;
        let p = MinedPredicate {
            expr,
            atoms: r.atoms,
            alpha: r.alpha,
            k: r.k,
            adjustment: r.adjustment,
            index: r.index,
            train_labels: r.train_labels,
            provenance: r.provenance,
        };
        p.lower()?;
        Ok(p)
    }
}

impl From<MinedPredicate> for PredicateRecord {
    fn from(p: MinedPredicate) -> Self {
        PredicateRecord {
            sexpr: p.sexpr(),
            atoms: p.atoms,
            alpha: p.alpha,
            k: p.k,
            adjustment: p.adjustment,
            index: p.index,
            train_labels: p.train_labels,
            provenance: p.provenance,
        }
    }
}

impl MinedPredicate {
    pub fn sexpr(&self) -> String {
        to_sexpr(&self.expr, &self.atoms).expect("expression is valid for its atom set")
    }

    pub fn lower(&self) -> Result<QuantilePredictor> {
        QuantilePredictor::with_index(Arc::clone(&self.index), self.train_labels.clone(), self.k, self.alpha / 2.0)
    }

    pub fn upper(&self) -> Result<QuantilePredictor> {
        QuantilePredictor::with_index(
            Arc::clone(&self.index),
            self.train_labels.clone(),
            self.k,
            1.0 - self.alpha / 2.0,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(src: &str) -> Result<Self> {
        Ok(serde_json::from_str(src)?)
    }

    /// Validation indices of the trial that produced this predicate,
    /// recomputed from its seed. Only meaningful on the same dataset.
    pub fn validation_indices(&self, dataset: &Dataset) -> Result<Vec<usize>> {
        let split = dataset.split(
            self.provenance.split,
            derive_seed(self.provenance.seed, &[stream::SPLIT]),
        )?;
        Ok(split.val)
    }

    /// Whether the expression is constant over all atom valuations.
    pub fn is_trivial(&self) -> bool {
        is_trivial(&self.expr, self.atoms.len())
    }

    /// Raw and calibrated intervals plus the true robustness on `indices`.
    pub fn predict_rows(&self, dataset: &Dataset, indices: &[usize]) -> Result<Vec<ValidationRow>> {
        if self.index.dim() != dataset.meta().t_obs * dataset.meta().dim {
            return Err(Error::Schema(format!(
                "predicate expects {} observation features, dataset provides {}",
                self.index.dim(),
                dataset.meta().t_obs * dataset.meta().dim
            )));
        }
        let f1 = self.lower()?;
        let f2 = self.upper()?;
        let feats: Vec<&[f64]> = indices.iter().map(|&i| dataset.observations()[i].features()).collect();
        let nbs = self.index.neighbors_batch(&feats, self.k)?;
        indices
            .iter()
            .zip(&nbs)
            .map(|(&i, nb)| {
                let raw = widen(f1.predict_from_neighbors(nb), f2.predict_from_neighbors(nb), 0.0);
                let calibrated = widen(raw.l, raw.h, self.adjustment.q);
                Ok(ValidationRow {
                    index: i,
                    raw,
                    calibrated,
                    truth: robustness(&self.expr, &self.atoms, &dataset.trajectories()[i])?,
                })
            })
            .collect()
    }
}

pub(crate) fn is_trivial(expr: &Expr, atom_count: usize) -> bool {
    if atom_count <= MAX_TRUTH_TABLE_ATOMS {
        truth_table(expr, atom_count).map(|t| t.is_constant()).unwrap_or(false)
    } else {
        simplify_cnf(expr).is_constant()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationRow {
    pub index: usize,
    /// Quantile pair before conformal widening.
    pub raw: RobustnessInterval,
    pub calibrated: RobustnessInterval,
    pub truth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    /// Miss rate of the raw quantile intervals; absent when the trial did
    /// not optimize over intervals.
    pub error_rate_nonconformal: Option<f64>,
    pub error_rate_conformal: f64,
    /// Mean calibrated width.
    pub efficiency: f64,
    pub is_trivial: bool,
    pub mean_l: f64,
    pub mean_h: f64,
    /// Mean share of each calibrated interval lying below zero, in percent.
    pub negative_percentage: f64,
    pub exec_time_seconds: f64,
}

/// Metrics of `pred` on the given validation rows. `exec_time_seconds` is
/// left at zero.
pub fn metrics_from_rows(pred: &MinedPredicate, rows: &[ValidationRow], with_raw: bool) -> Result<TrialMetrics> {
    if rows.is_empty() {
        return Err(Error::invalid("validation set is empty"));
    }
    let n = rows.len() as f64;
    let mean = |f: &dyn Fn(&ValidationRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let miss = |iv: &RobustnessInterval, y: f64| if iv.contains(y) { 0.0 } else { 1.0 };
    Ok(TrialMetrics {
        error_rate_nonconformal: with_raw.then(|| mean(&|r| miss(&r.raw, r.truth))),
        error_rate_conformal: mean(&|r| miss(&r.calibrated, r.truth)),
        efficiency: mean(&|r| r.calibrated.width()),
        is_trivial: pred.is_trivial(),
        mean_l: mean(&|r| r.calibrated.l),
        mean_h: mean(&|r| r.calibrated.h),
        negative_percentage: 100.0 * mean(&|r| r.calibrated.negative_fraction()),
        exec_time_seconds: 0.0,
    })
}

pub fn compute_metrics(pred: &MinedPredicate, dataset: &Dataset, val: &[usize]) -> Result<TrialMetrics> {
    let rows = pred.predict_rows(dataset, val)?;
    metrics_from_rows(pred, &rows, pred.provenance.use_intervals)
}

#[cfg(test)]
mod tests;
