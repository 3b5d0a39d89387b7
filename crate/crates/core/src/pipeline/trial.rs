use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{metrics_from_rows, MinedPredicate, Provenance, TrialMetrics};
use crate::config::ExperimentConfig;
use crate::cqr::{calibrate_from_predictions, features, fit_atom_bank_audited, quantiles};
use crate::dataset::{Dataset, SplitAccess, SplitName};
use crate::error::{Error, Result};
use crate::opt::{optimize_run, ConvergenceRow, LossConfig, OptimizerConfig};
use crate::rng::{derive_seed, stream};
use crate::stl::{robustness, AtomSet};

/// Stage names used in errors and in the split access log.
pub const STAGES: [&str; 5] = ["split", "atom_bank", "optimize", "conformalize", "evaluate"];

/// Everything a trial needs besides the data and the seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub alpha: f64,
    pub k: Option<usize>,
    pub split: [f64; 5],
    pub loss: LossConfig,
    pub optimizer: OptimizerConfig,
    /// When false the optimizer sees zero-width median predictions
    /// instead of calibrated intervals.
    pub use_intervals: bool,
}

impl TrialSpec {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Self {
            alpha: cfg.cqr.alpha,
            k: cfg.cqr.k,
            split: cfg.trials.split,
            loss: cfg.loss.clone(),
            optimizer: cfg.optimizer.clone(),
            use_intervals: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub predicate: MinedPredicate,
    pub metrics: TrialMetrics,
    /// Validation indices the metrics were computed on.
    pub val: Vec<usize>,
    /// `(stage, part)` pairs in first-access order.
    pub access_log: Vec<(&'static str, SplitName)>,
    pub convergence: Vec<ConvergenceRow>,
}

/// Runs one trial. All randomness derives from `seed`.
pub fn run_trial(dataset: &Dataset, atoms: &AtomSet, spec: &TrialSpec, seed: u64) -> Result<TrialOutcome> {
    let [s_split, s_bank, s_opt, s_conf, s_eval] = STAGES;
    if let Some(d) = atoms.iter().map(|a| a.required_dim()).max() {
        if d > dataset.meta().dim {
            return Err(Error::Schema(format!(
                "atoms need state dimension {d}, dataset has {}",
                dataset.meta().dim
            )));
        }
    }
    let split = dataset
        .split(spec.split, derive_seed(seed, &[stream::SPLIT]))
        .map_err(|e| e.at_stage(s_split))?;
    let access = SplitAccess::new(&split);

    let bank = fit_atom_bank_audited(atoms, &access, dataset, spec.alpha, spec.k).map_err(|e| e.at_stage(s_bank))?;

    let started = Instant::now();
    access.take(s_opt, SplitName::Test);
    let matrix = if spec.use_intervals {
        &bank.test_intervals
    } else {
        &bank.test_points
    };
    let opt = OptimizerConfig {
        seed: derive_seed(seed, &[stream::OPTIMIZE]),
        ..spec.optimizer.clone()
    };
    let run = optimize_run(matrix, &spec.loss, &opt, None).map_err(|e| e.at_stage(s_opt))?;
    let best = &run.best;

    let conformalize = || -> Result<_> {
        let train = access.take(s_conf, SplitName::Train);
        let cal = access.take(s_conf, SplitName::Cal2);
        let label = |i: &usize| robustness(&best.expr, atoms, &dataset.trajectories()[*i]);
        let train_labels: Vec<f64> = train.iter().map(label).collect::<Result<_>>()?;
        let cal_labels: Vec<f64> = cal.iter().map(label).collect::<Result<_>>()?;
        let index = Arc::clone(bank.index());
        let nb = index.neighbors_batch(&features(dataset, cal), bank.k)?;
        let lo = quantiles(&train_labels, &nb, bank.k, spec.alpha / 2.0);
        let hi = quantiles(&train_labels, &nb, bank.k, 1.0 - spec.alpha / 2.0);
        let adjustment = calibrate_from_predictions(&lo, &hi, &cal_labels, spec.alpha)?;
        Ok(MinedPredicate {
            expr: best.expr.clone(),
            atoms: atoms.clone(),
            alpha: spec.alpha,
            k: bank.k,
            adjustment,
            index,
            train_labels,
            provenance: Provenance {
                seed,
                dataset_hash: dataset.content_hash(),
                split: spec.split,
                loss: spec.loss.clone(),
                optimizer: opt.clone(),
                use_intervals: spec.use_intervals,
                mined_loss: best.loss,
                config: None,
            },
        })
    };
    let predicate = conformalize().map_err(|e| e.at_stage(s_conf))?;
    let elapsed = started.elapsed().as_secs_f64();

    let val = access.take(s_eval, SplitName::Val);
    let mut metrics = predicate
        .predict_rows(dataset, val)
        .and_then(|rows| metrics_from_rows(&predicate, &rows, spec.use_intervals))
        .map_err(|e| e.at_stage(s_eval))?;
    metrics.exec_time_seconds = elapsed;
    Ok(TrialOutcome {
        predicate,
        metrics,
        val: val.to_vec(),
        access_log: access.log(),
        convergence: run.log,
    })
}
