use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    calibrate_from_predictions, conformal_rank, default_k, widen, ConformalAdjustment, KnnIndex,
    Neighbors, QuantilePredictor,
};
use crate::dataset::{Dataset, SplitAccess, SplitDataset, SplitName};
use crate::error::{Error, Result};
use crate::interval::IntervalMatrix;
use crate::stl::AtomSet;

pub(crate) const STAGE: &str = "atom_bank";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct BankEntry {
    train_labels: Vec<f64>,
    adjustment: ConformalAdjustment,
}

/// Calibrated `(f1, f2, q)` for every atom, fit on the training part and
/// calibrated on the first calibration part, plus the materialized
/// intervals on the test part. Serializes as one artifact; the kNN index
/// is stored once and shared by all predictors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomBank {
    pub atoms: AtomSet,
    pub alpha: f64,
    pub k: usize,
    index: Arc<KnnIndex>,
    entries: Vec<BankEntry>,
    pub test_indices: Vec<usize>,
    /// Calibrated intervals, atoms x test trajectories.
    pub test_intervals: IntervalMatrix,
    /// Median (level 0.5) point predictions on the test part as zero-width
    /// intervals, for optimizing without interval information.
    pub test_points: IntervalMatrix,
}

impl AtomBank {
    pub fn index(&self) -> &Arc<KnnIndex> {
        &self.index
    }

    pub fn adjustment(&self, atom: usize) -> ConformalAdjustment {
        self.entries[atom].adjustment
    }

    pub fn lower(&self, atom: usize) -> QuantilePredictor {
        self.predictor(atom, self.alpha / 2.0)
    }

    pub fn upper(&self, atom: usize) -> QuantilePredictor {
        self.predictor(atom, 1.0 - self.alpha / 2.0)
    }

    fn predictor(&self, atom: usize, level: f64) -> QuantilePredictor {
        QuantilePredictor::with_index(
            Arc::clone(&self.index),
            self.entries[atom].train_labels.clone(),
            self.k,
            level,
        )
        .expect("bank entries are validated at fit time")
    }
}

/// Robustness of `atom` on the full trajectories at `indices`.
pub(crate) fn atom_labels(atoms: &AtomSet, dataset: &Dataset, indices: &[usize]) -> Result<Vec<Vec<f64>>> {
    atoms
        .iter()
        .map(|a| {
            indices
                .iter()
                .map(|&i| a.robustness(&dataset.trajectories()[i]))
                .collect()
        })
        .collect()
}

pub(crate) fn features<'d>(dataset: &'d Dataset, indices: &[usize]) -> Vec<&'d [f64]> {
    indices
        .iter()
        .map(|&i| dataset.observations()[i].features())
        .collect()
}

pub(crate) fn quantiles(labels: &[f64], neighbors: &[Neighbors], k: usize, level: f64) -> Vec<f64> {
    neighbors
        .iter()
        .map(|nb| {
            let mut v: Vec<f64> = nb[..k].iter().map(|&i| labels[i]).collect();
            super::knn::lower_quantile(&mut v, level)
        })
        .collect()
}

/// Fits and calibrates the per-atom predictors. `k = None` uses `⌈√|train|⌉`.
pub fn fit_atom_bank(
    atoms: &AtomSet,
    split: &SplitDataset,
    dataset: &Dataset,
    alpha: f64,
    k: Option<usize>,
) -> Result<AtomBank> {
    fit_atom_bank_audited(atoms, &SplitAccess::new(split), dataset, alpha, k)
}

pub(crate) fn fit_atom_bank_audited(
    atoms: &AtomSet,
    access: &SplitAccess<'_>,
    dataset: &Dataset,
    alpha: f64,
    k: Option<usize>,
) -> Result<AtomBank> {
    let train = access.take(STAGE, SplitName::Train);
    let cal = access.take(STAGE, SplitName::Cal1);
    let test = access.take(STAGE, SplitName::Test);
    let k = k.unwrap_or_else(|| default_k(train.len()));
    if k == 0 || k > train.len() {
        return Err(Error::invalid(format!(
            "k = {k} must lie in [1, {}] (training size)",
            train.len()
        )));
    }
    conformal_rank(cal.len(), alpha)?;

    let index = Arc::new(KnnIndex::fit(&features(dataset, train))?);
    let cal_nb = index.neighbors_batch(&features(dataset, cal), k)?;
    let test_nb = index.neighbors_batch(&features(dataset, test), k)?;
    let train_labels = atom_labels(atoms, dataset, train)?;
    let cal_labels = atom_labels(atoms, dataset, cal)?;

    let lo_level = alpha / 2.0;
    let hi_level = 1.0 - alpha / 2.0;
    let per_atom = (0..atoms.len())
        .into_par_iter()
        .map(|a| -> Result<_> {
            let y = &train_labels[a];
            let cal_lo = quantiles(y, &cal_nb, k, lo_level);
            let cal_hi = quantiles(y, &cal_nb, k, hi_level);
            let adjustment = calibrate_from_predictions(&cal_lo, &cal_hi, &cal_labels[a], alpha)?;
            let test_lo = quantiles(y, &test_nb, k, lo_level);
            let test_hi = quantiles(y, &test_nb, k, hi_level);
            let (l, h): (Vec<f64>, Vec<f64>) = test_lo
                .iter()
                .zip(&test_hi)
                .map(|(a, b)| {
                    let iv = widen(*a, *b, adjustment.q);
                    (iv.l, iv.h)
                })
                .unzip();
            let median = quantiles(y, &test_nb, k, 0.5);
            Ok((
                BankEntry {
                    train_labels: y.clone(),
                    adjustment,
                },
                l,
                h,
                median,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut entries = Vec::with_capacity(atoms.len());
    let (mut lo, mut hi, mut mid) = (Vec::new(), Vec::new(), Vec::new());
    for (e, l, h, m) in per_atom {
        entries.push(e);
        lo.push(l);
        hi.push(h);
        mid.push(m);
    }
    Ok(AtomBank {
        atoms: atoms.clone(),
        alpha,
        k,
        index,
        entries,
        test_indices: test.to_vec(),
        test_intervals: IntervalMatrix::from_bounds(lo, hi)?,
        test_points: IntervalMatrix::from_bounds(mid.clone(), mid)?,
    })
}
