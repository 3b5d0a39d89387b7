//! kNN quantile regression and split conformalized quantile regression.
//!
//! For a predicate with robustness label `y`, a lower predictor `f1` at
//! level `α/2` and an upper predictor `f2` at level `1 - α/2` are fit on the
//! training observations. On a calibration set the nonconformity score is
//! `s = max(f1(z) - y, y - f2(z))`, and the adjustment `q` is the
//! `⌈(n+1)(1-α)⌉`-th smallest score. The calibrated interval is
//! `[f1(z) - q, f2(z) + q]`, which covers `y` with probability at least
//! `1 - α` under exchangeability.

mod bank;
mod conformal;
mod knn;

pub use bank::{fit_atom_bank, AtomBank};
pub(crate) use bank::{features, fit_atom_bank_audited, quantiles};
pub use conformal::{
    calibrate, calibrate_from_predictions, conformal_quantile, conformal_rank, predict_interval,
    widen, ConformalAdjustment,
};
pub use knn::{default_k, fit_quantile, KnnIndex, Neighbors, QuantilePredictor};

pub use crate::interval::RobustnessInterval;
