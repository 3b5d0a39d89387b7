use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::IntervalMatrix;
use crate::stl::{length_penalty, trivial_penalty, Expr};

/// Value returned for a TeLEx term whose denominator vanishes or overflows.
pub const PENALTY_CAP: f64 = 1e9;
const POLE_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Linear,
    Telex,
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(LossKind::Linear),
            "telex" => Ok(LossKind::Telex),
            other => Err(Error::Config(format!("unknown loss `{other}` (expected linear or telex)"))),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Linear => "linear",
            LossKind::Telex => "telex",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub kind: LossKind,
    /// Slack width. Linear: zero-loss band `[0, w]`; TeLEx: offset on `h`.
    pub w: f64,
    /// Slope of the linear loss above `w`.
    pub lambda: f64,
    /// TeLEx sharpness, shared by both endpoints.
    pub beta: f64,
    /// Weight of the length penalty.
    pub a1: f64,
    /// Weight of the trivial penalty.
    pub a2: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            kind: LossKind::Telex,
            w: 0.5,
            lambda: 1.0,
            beta: 5.0,
            a1: 0.001,
            a2: 1.0,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite();
        if !(ok(self.w) && self.w > 0.0) {
            return Err(Error::Config(format!("loss.w must be positive, got {}", self.w)));
        }
        if !(ok(self.beta) && self.beta > 0.0) {
            return Err(Error::Config(format!("loss.beta must be positive, got {}", self.beta)));
        }
        if !(ok(self.lambda) && self.lambda >= 0.0) {
            return Err(Error::Config(format!("loss.lambda must be nonnegative, got {}", self.lambda)));
        }
        if !(ok(self.a1) && self.a1 >= 0.0 && ok(self.a2) && self.a2 >= 0.0) {
            return Err(Error::Config(format!(
                "loss.a1 and loss.a2 must be nonnegative, got {} and {}",
                self.a1, self.a2
            )));
        }
        Ok(())
    }

    pub fn interval_loss(&self, l: f64, h: f64) -> f64 {
        match self.kind {
            LossKind::Linear => linear_loss(l, h, self),
            LossKind::Telex => telex_loss(l, h, self),
        }
    }
}

pub fn linear_loss(l: f64, h: f64, cfg: &LossConfig) -> f64 {
    let one = |r: f64| (-r).max(0.0).max(cfg.lambda * (r - cfg.w));
    one(l).max(one(h))
}

fn telex_term(r: f64, beta: f64) -> f64 {
    let d = r + (-beta * r).exp();
    if d.abs() < POLE_EPS {
        return PENALTY_CAP;
    }
    let v = -1.0 / d + (-r).exp();
    if v.is_finite() {
        v.min(PENALTY_CAP)
    } else {
        PENALTY_CAP
    }
}

pub fn telex_loss(l: f64, h: f64, cfg: &LossConfig) -> f64 {
    telex_term(l, cfg.beta) + telex_term(h - cfg.w, cfg.beta)
}

/// Mean interval loss over columns of composed bounds.
pub fn mean_interval_loss(lo: &[f64], hi: &[f64], cfg: &LossConfig) -> f64 {
    let sum: f64 = lo.iter().zip(hi).map(|(&l, &h)| cfg.interval_loss(l, h)).sum();
    sum / lo.len() as f64
}

pub fn penalty_terms(expr: &Expr, cfg: &LossConfig) -> f64 {
    let mut p = cfg.a1 * length_penalty(expr) as f64;
    // The CNF pass is the expensive part; skip it when it cannot matter.
    if cfg.a2 != 0.0 {
        p += cfg.a2 * trivial_penalty(expr) as f64;
    }
    p
}

/// Objective of `expr` given its composed intervals.
pub fn total_loss(expr: &Expr, lo: &[f64], hi: &[f64], cfg: &LossConfig) -> Result<f64> {
    if lo.is_empty() || lo.len() != hi.len() {
        return Err(Error::invalid("total loss needs a nonempty, matched set of intervals"));
    }
    Ok(mean_interval_loss(lo, hi, cfg) + penalty_terms(expr, cfg))
}

/// Objective of `expr` on every column of `matrix`.
pub fn matrix_loss(expr: &Expr, matrix: &IntervalMatrix, cfg: &LossConfig) -> Result<f64> {
    let (lo, hi) = matrix.compose_bounds(expr)?;
    total_loss(expr, &lo, &hi, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin() -> LossConfig {
        LossConfig {
            kind: LossKind::Linear,
            ..Default::default()
        }
    }

    #[test]
    fn linear_examples() {
        let c = lin();
        assert_eq!(linear_loss(0.2, 0.4, &c), 0.0);
        assert!((linear_loss(-0.3, 0.4, &c) - 0.3).abs() < 1e-15);
        assert!((linear_loss(0.2, 1.5, &c) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn telex_examples() {
        let c = LossConfig::default();
        assert!(telex_loss(0.0, 0.5, &c).abs() < 1e-15);
        let one = -1.0 / (-0.5 + 2.5f64.exp()) + 0.5f64.exp();
        assert!((telex_loss(-0.5, 0.0, &c) - 2.0 * one).abs() < 1e-12);
        assert!(telex_loss(1e6, 1e6, &c).abs() < 1e-5);
    }

    #[test]
    fn telex_term_shape() {
        let grid: Vec<f64> = (0..=400).map(|i| -1.0 + i as f64 * 0.01).collect();
        let v: Vec<f64> = grid.iter().map(|&r| telex_term(r, 5.0)).collect();
        let argmin = (0..v.len()).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
        assert!(grid[argmin] > 0.0 && grid[argmin] < 1.0);
        assert!(v[..argmin].windows(2).all(|w| w[1] < w[0]));
        assert!(v[argmin..].windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn linear_zero_band() {
        let c = lin();
        for i in 0..=40 {
            for j in i..=40 {
                let (l, h) = (-1.0 + i as f64 * 0.05, -1.0 + j as f64 * 0.05);
                let inside = (0.0..=0.5).contains(&l) && (0.0..=0.5).contains(&h);
                let v = linear_loss(l, h, &c);
                assert_eq!(v == 0.0, inside, "l={l} h={h} v={v}");
            }
        }
    }

    #[test]
    fn penalties_in_total() {
        let cfg = LossConfig {
            kind: LossKind::Linear,
            a2: 0.0,
            ..Default::default()
        };
        let e = Expr::and([Expr::atom(0), Expr::or([Expr::atom(1), Expr::not(Expr::atom(2))])]);
        assert_eq!(e.len(), 6);
        let e5 = Expr::and([Expr::atom(0), Expr::or([Expr::atom(1), Expr::atom(2)])]);
        assert_eq!(e5.len(), 5);
        let v = total_loss(&e5, &[0.2], &[0.4], &cfg).unwrap();
        assert!((v - 0.005).abs() < 1e-15);

        let cfg = LossConfig {
            kind: LossKind::Linear,
            a1: 0.0,
            ..Default::default()
        };
        let taut = Expr::or([Expr::atom(0), Expr::not(Expr::atom(0))]);
        let base = mean_interval_loss(&[-0.3], &[0.4], &cfg);
        assert_eq!(total_loss(&taut, &[-0.3], &[0.4], &cfg).unwrap(), base + 3.0);
        assert!(total_loss(&taut, &[], &[], &cfg).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(LossConfig::default().validate().is_ok());
        for bad in [
            LossConfig { w: 0.0, ..Default::default() },
            LossConfig { beta: -1.0, ..Default::default() },
            LossConfig { a2: -0.1, ..Default::default() },
            LossConfig { a1: f64::NAN, ..Default::default() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))));
        }
    }
}
