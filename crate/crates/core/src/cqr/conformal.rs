use serde::{Deserialize, Serialize};

use super::{QuantilePredictor, RobustnessInterval};
use crate::error::{Error, Result};

/// Additive widening `q` computed on a calibration set of size `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalAdjustment {
    pub q: f64,
    pub alpha: f64,
    pub n: usize,
}

/// 1-based rank `⌈(n+1)(1-α)⌉` of the conformal quantile; errors when it
/// exceeds `n`, i.e. when `n < (1-α)/α`.
pub fn conformal_rank(n: usize, alpha: f64) -> Result<usize> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Calibration(format!("alpha {alpha} must lie in (0, 1)")));
    }
    if n == 0 {
        return Err(Error::Calibration("calibration set is empty".into()));
    }
    let rank = (((n + 1) as f64) * (1.0 - alpha) - 1e-9).ceil().max(1.0) as usize;
    if rank > n {
        return Err(Error::Calibration(format!(
            "{n} calibration points are too few for alpha = {alpha} (rank {rank} > n)"
        )));
    }
    Ok(rank)
}

/// The `⌈(n+1)(1-α)⌉`-th smallest score.
pub fn conformal_quantile(scores: &[f64], alpha: f64) -> Result<f64> {
    let rank = conformal_rank(scores.len(), alpha)?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Calibration("NaN nonconformity score".into()));
    }
    let mut s = scores.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s[rank - 1])
}

fn ordered(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Calibrated interval from raw quantile predictions. An inverted raw pair
/// is swapped first. If a negative `q` would cross the endpoints, the
/// interval collapses to its midpoint.
pub fn widen(lower: f64, upper: f64, q: f64) -> RobustnessInterval {
    let (lo, hi) = ordered(lower, upper);
    let (l, h) = (lo - q, hi + q);
    if l <= h {
        RobustnessInterval { l, h }
    } else {
        RobustnessInterval::point(0.5 * (lo + hi))
    }
}

/// Adjustment from raw predictions `(f1(z_i), f2(z_i))` and labels `y_i`.
pub fn calibrate_from_predictions(lower: &[f64], upper: &[f64], labels: &[f64], alpha: f64) -> Result<ConformalAdjustment> {
    if lower.len() != labels.len() || upper.len() != labels.len() {
        return Err(Error::Calibration(format!(
            "{} / {} predictions for {} labels",
            lower.len(),
            upper.len(),
            labels.len()
        )));
    }
    let scores: Vec<f64> = lower
        .iter()
        .zip(upper)
        .zip(labels)
        .map(|((a, b), y)| {
            let (lo, hi) = ordered(*a, *b);
            (lo - y).max(y - hi)
        })
        .collect();
    Ok(ConformalAdjustment {
        q: conformal_quantile(&scores, alpha)?,
        alpha,
        n: labels.len(),
    })
}

/// Split-conformal adjustment of the pair `(f1, f2)` on a calibration set.
pub fn calibrate<F: AsRef<[f64]>>(
    f1: &QuantilePredictor,
    f2: &QuantilePredictor,
    cal_features: &[F],
    cal_labels: &[f64],
    alpha: f64,
) -> Result<ConformalAdjustment> {
    conformal_rank(cal_labels.len(), alpha)?;
    let lower = cal_features
        .iter()
        .map(|z| f1.predict(z.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let upper = cal_features
        .iter()
        .map(|z| f2.predict(z.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    calibrate_from_predictions(&lower, &upper, cal_labels, alpha)
}

/// `[f1(z) - q, f2(z) + q]`.
pub fn predict_interval(
    f1: &QuantilePredictor,
    f2: &QuantilePredictor,
    adj: &ConformalAdjustment,
    z: &[f64],
) -> Result<RobustnessInterval> {
    Ok(widen(f1.predict(z)?, f2.predict(z)?, adj.q))
}
