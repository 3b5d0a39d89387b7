use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `⌈√n⌉`, at least 1.
pub fn default_k(n_train: usize) -> usize {
    ((n_train as f64).sqrt().ceil() as usize).max(1)
}

/// Training features standardized per coordinate (mean/std of the training
/// set), searched by brute force under Euclidean distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnIndex {
    dim: usize,
    mean: Vec<f64>,
    scale: Vec<f64>,
    data: Vec<f64>,
}

/// Training-point indices of the nearest neighbors, closest first.
pub type Neighbors = Vec<usize>;

impl KnnIndex {
    pub fn fit<F: AsRef<[f64]>>(features: &[F]) -> Result<Self> {
        let first = features
            .first()
            .ok_or_else(|| Error::invalid("kNN index needs at least one training point"))?;
        let dim = first.as_ref().len();
        if dim == 0 {
            return Err(Error::invalid("feature vectors are empty"));
        }
        let n = features.len() as f64;
        let mut mean = vec![0.0; dim];
        for f in features {
            let f = f.as_ref();
            if f.len() != dim {
                return Err(Error::invalid(format!(
                    "feature vector of length {} (expected {dim})",
                    f.len()
                )));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("non-finite feature value"));
            }
            mean.iter_mut().zip(f).for_each(|(m, v)| *m += v / n);
        }
        let mut var = vec![0.0; dim];
        for f in features {
            var.iter_mut()
                .zip(f.as_ref().iter().zip(&mean))
                .for_each(|(s, (v, m))| *s += (v - m) * (v - m) / n);
        }
        let scale: Vec<f64> = var
            .iter()
            .map(|v| if *v > 1e-24 { v.sqrt() } else { 1.0 })
            .collect();
        let mut data = Vec::with_capacity(features.len() * dim);
        for f in features {
            data.extend(
                f.as_ref()
                    .iter()
                    .zip(mean.iter().zip(&scale))
                    .map(|(v, (m, s))| (v - m) / s),
            );
        }
        Ok(Self {
            dim,
            mean,
            scale,
            data,
        })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The `k` nearest training points to `query`, ordered by distance with
    /// ties broken by training index.
    pub fn neighbors(&self, query: &[f64], k: usize) -> Result<Neighbors> {
        if query.len() != self.dim {
            return Err(Error::invalid(format!(
                "query of length {} (index dimension {})",
                query.len(),
                self.dim
            )));
        }
        if k == 0 || k > self.len() {
            return Err(Error::invalid(format!(
                "k = {k} must lie in [1, {}]",
                self.len()
            )));
        }
        let z: Vec<f64> = query
            .iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect();
        let mut dist: Vec<(f64, usize)> = self
            .data
            .chunks_exact(self.dim)
            .enumerate()
            .map(|(i, row)| {
                let d: f64 = row.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, i)
            })
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
            dist.truncate(k);
        }
        dist.sort_unstable_by(cmp);
        Ok(dist.into_iter().map(|(_, i)| i).collect())
    }

    /// Neighbor lists for many queries; evaluated in parallel.
    pub fn neighbors_batch<F: AsRef<[f64]> + Sync>(&self, queries: &[F], k: usize) -> Result<Vec<Neighbors>> {
        queries
            .par_iter()
            .map(|q| self.neighbors(q.as_ref(), k))
            .collect()
    }
}

/// Lower empirical quantile: the `⌈level·k⌉`-th smallest of `values`.
pub(crate) fn lower_quantile(values: &mut [f64], level: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    let rank = ((level * k as f64 - 1e-9).ceil() as usize).clamp(1, k);
    values[rank - 1]
}

/// kNN regressor for the `level`-quantile of a label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantilePredictor {
    index: Arc<KnnIndex>,
    labels: Vec<f64>,
    k: usize,
    level: f64,
}

impl QuantilePredictor {
    /// Predictor over an existing index; `labels[i]` belongs to training point `i`.
    pub fn with_index(index: Arc<KnnIndex>, labels: Vec<f64>, k: usize, level: f64) -> Result<Self> {
        if labels.len() != index.len() {
            return Err(Error::invalid(format!(
                "{} labels for {} training points",
                labels.len(),
                index.len()
            )));
        }
        if labels.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite label"));
        }
        if k == 0 || k > labels.len() {
            return Err(Error::invalid(format!(
                "k = {k} must lie in [1, {}]",
                labels.len()
            )));
        }
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::invalid(format!("quantile level {level} must lie in (0, 1)")));
        }
        Ok(Self {
            index,
            labels,
            k,
            level,
        })
    }

    pub fn index(&self) -> &Arc<KnnIndex> {
        &self.index
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn predict(&self, z: &[f64]) -> Result<f64> {
        let nb = self.index.neighbors(z, self.k)?;
        Ok(self.predict_from_neighbors(&nb))
    }

    /// Prediction from a precomputed neighbor list (only the first `k` are used).
    pub fn predict_from_neighbors(&self, neighbors: &[usize]) -> f64 {
        let mut vals: Vec<f64> = neighbors[..self.k].iter().map(|&i| self.labels[i]).collect();
        lower_quantile(&mut vals, self.level)
    }
}

/// Builds a standardized index over `features` and a `level`-quantile predictor.
pub fn fit_quantile<F: AsRef<[f64]>>(features: &[F], labels: &[f64], k: usize, level: f64) -> Result<QuantilePredictor> {
    if features.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} features but {} labels",
            features.len(),
            labels.len()
        )));
    }
    if k > features.len() {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the {} training points",
            features.len()
        )));
    }
    let index = Arc::new(KnnIndex::fit(features)?);
    QuantilePredictor::with_index(index, labels.to_vec(), k, level)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_features(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![i as f64]).collect()
    }

    #[test]
    fn all_points_median() {
        let f = line_features(5);
        let p = fit_quantile(&f, &[1.0, 2.0, 3.0, 4.0, 5.0], 5, 0.5).unwrap();
        for q in [-10.0, 0.0, 2.3, 100.0] {
            assert_eq!(p.predict(&[q]).unwrap(), 3.0);
        }
    }

    #[test]
    fn single_neighbor_returns_its_label() {
        let f = line_features(4);
        let labels = [0.5, -1.0, 2.0, 7.0];
        for level in [0.05, 0.5, 0.95] {
            let p = fit_quantile(&f, &labels, 1, level).unwrap();
            assert_eq!(p.predict(&[2.1]).unwrap(), 2.0);
            assert_eq!(p.predict(&[-3.0]).unwrap(), 0.5);
        }
    }

    #[test]
    fn top_order_statistic() {
        let f = line_features(4);
        let p = fit_quantile(&f, &[0.1, 0.2, 0.3, 0.9], 4, 1.0 - 1e-6).unwrap();
        assert_eq!(p.predict(&[0.0]).unwrap(), 0.9);
        let p = fit_quantile(&f, &[0.1, 0.2, 0.3, 0.9], 4, 1e-6).unwrap();
        assert_eq!(p.predict(&[0.0]).unwrap(), 0.1);
    }

    #[test]
    fn quantile_rank_is_robust_to_rounding() {
        // 0.05 * 20 is not exactly 1 in floating point.
        let mut v: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(lower_quantile(&mut v, 0.05), 1.0);
        let mut v: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(lower_quantile(&mut v, 0.95), 19.0);
    }

    #[test]
    fn invalid_arguments() {
        let f = line_features(3);
        assert!(fit_quantile(&f, &[1.0, 2.0, 3.0], 4, 0.5).is_err());
        assert!(fit_quantile(&f, &[1.0, 2.0], 1, 0.5).is_err());
        assert!(fit_quantile(&f, &[1.0, 2.0, 3.0], 1, 1.0).is_err());
        assert!(fit_quantile(&f, &[1.0, 2.0, 3.0], 0, 0.5).is_err());
        let p = fit_quantile(&f, &[1.0, 2.0, 3.0], 1, 0.5).unwrap();
        assert!(p.predict(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn neighbors_are_standardized_and_tie_broken() {
        // Second coordinate has a huge scale; after standardization both
        // coordinates weigh the same.
        let f = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1000.0], vec![1.0, 1000.0]];
        let idx = KnnIndex::fit(&f).unwrap();
        assert_eq!(idx.neighbors(&[0.0, 0.0], 4).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(idx.neighbors(&[0.5, 500.0], 4).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(idx.neighbors(&[1.0, 1000.0], 2).unwrap(), vec![3, 1]);
    }

    #[test]
    fn constant_feature_does_not_divide_by_zero() {
        let f = vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]];
        let idx = KnnIndex::fit(&f).unwrap();
        assert_eq!(idx.neighbors(&[1.0, 1.9], 1).unwrap(), vec![2]);
    }
}
