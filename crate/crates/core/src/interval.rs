//! Calibrated interval arithmetic: robustness intervals propagated through
//! an expression tree. `and` takes the endpoint-wise minimum, `or` the
//! endpoint-wise maximum and `not` maps `[l, h]` to `[-h, -l]`. The result
//! is an outer bound on the robustness of the composed predicate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stl::Expr;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessInterval {
    pub l: f64,
    pub h: f64,
}

impl RobustnessInterval {
    /// Rejects NaN endpoints and inverted pairs.
    pub fn new(l: f64, h: f64) -> Result<Self> {
        if l.is_nan() || h.is_nan() || l > h {
            return Err(Error::invalid(format!("interval [{l}, {h}] is not ordered")));
        }
        Ok(Self { l, h })
    }

    pub fn point(r: f64) -> Self {
        Self { l: r, h: r }
    }

    pub fn width(&self) -> f64 {
        self.h - self.l
    }

    pub fn contains(&self, y: f64) -> bool {
        self.l <= y && y <= self.h
    }

    /// Fraction of the interval lying below zero, in `[0, 1]`. Zero-width
    /// intervals count as fully negative when below zero.
    pub fn negative_fraction(&self) -> f64 {
        if self.h <= self.l {
            return if self.l < 0.0 { 1.0 } else { 0.0 };
        }
        ((0.0f64.min(self.h) - self.l).max(0.0) / self.width()).clamp(0.0, 1.0)
    }
}

/// Per-atom robustness intervals over a set of trajectories, stored as one
/// row of lower and one row of upper bounds per atom.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalMatrix {
    lo: Vec<Vec<f64>>,
    hi: Vec<Vec<f64>>,
}

impl IntervalMatrix {
    pub fn from_bounds(lo: Vec<Vec<f64>>, hi: Vec<Vec<f64>>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::invalid("interval matrix needs matching nonempty rows"));
        }
        let n = lo[0].len();
        if n == 0 {
            return Err(Error::invalid("interval matrix has no columns"));
        }
        for (i, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if l.len() != n || h.len() != n {
                return Err(Error::invalid(format!("interval matrix row {i} is ragged")));
            }
            for (j, (a, b)) in l.iter().zip(h).enumerate() {
                RobustnessInterval::new(*a, *b)
                    .map_err(|e| Error::invalid(format!("entry ({i}, {j}): {e}")))?;
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn from_rows(rows: Vec<Vec<RobustnessInterval>>) -> Result<Self> {
        let lo = rows.iter().map(|r| r.iter().map(|i| i.l).collect()).collect();
        let hi = rows.iter().map(|r| r.iter().map(|i| i.h).collect()).collect();
        Self::from_bounds(lo, hi)
    }

    pub fn atom_count(&self) -> usize {
        self.lo.len()
    }

    /// Number of trajectory columns.
    pub fn len(&self) -> usize {
        self.lo[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, atom: usize, col: usize) -> RobustnessInterval {
        RobustnessInterval {
            l: self.lo[atom][col],
            h: self.hi[atom][col],
        }
    }

    pub fn column(&self, col: usize) -> Vec<RobustnessInterval> {
        (0..self.atom_count()).map(|a| self.get(a, col)).collect()
    }

    pub fn row_bounds(&self, atom: usize) -> (&[f64], &[f64]) {
        (&self.lo[atom], &self.hi[atom])
    }

    /// Composed bounds for every column, as separate lower/upper vectors.
    pub fn compose_bounds(&self, expr: &Expr) -> Result<(Vec<f64>, Vec<f64>)> {
        if let Some(i) = expr.max_atom() {
            if i >= self.atom_count() {
                return Err(Error::invalid(format!(
                    "expression references atom {} but the matrix has {} rows",
                    i + 1,
                    self.atom_count()
                )));
            }
        }
        Ok(self.bounds_rec(expr))
    }

    fn bounds_rec(&self, expr: &Expr) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        match expr {
            Expr::Atom(i) => (self.lo[*i].clone(), self.hi[*i].clone()),
            Expr::Not(c) => {
                let (l, h) = self.bounds_rec(c);
                (h.into_iter().map(|v| -v).collect(), l.into_iter().map(|v| -v).collect())
            }
            Expr::And(cs) => {
                let mut acc = (vec![f64::INFINITY; n], vec![f64::INFINITY; n]);
                for c in cs {
                    let (l, h) = self.bounds_rec(c);
                    acc.0.iter_mut().zip(&l).for_each(|(a, b)| *a = a.min(*b));
                    acc.1.iter_mut().zip(&h).for_each(|(a, b)| *a = a.min(*b));
                }
                acc
            }
            Expr::Or(cs) => {
                let mut acc = (vec![f64::NEG_INFINITY; n], vec![f64::NEG_INFINITY; n]);
                for c in cs {
                    let (l, h) = self.bounds_rec(c);
                    acc.0.iter_mut().zip(&l).for_each(|(a, b)| *a = a.max(*b));
                    acc.1.iter_mut().zip(&h).for_each(|(a, b)| *a = a.max(*b));
                }
                acc
            }
        }
    }
}

/// Interval of `expr` given one interval per atom.
pub fn compose(expr: &Expr, column: &[RobustnessInterval]) -> Result<RobustnessInterval> {
    match expr {
        Expr::Atom(i) => {
            let iv = column.get(*i).ok_or_else(|| {
                Error::invalid(format!("no interval for atom {} (have {})", i + 1, column.len()))
            })?;
            RobustnessInterval::new(iv.l, iv.h)
        }
        Expr::Not(c) => {
            let iv = compose(c, column)?;
            Ok(RobustnessInterval { l: -iv.h, h: -iv.l })
        }
        Expr::And(cs) => cs.iter().try_fold(
            RobustnessInterval::point(f64::INFINITY),
            |acc, c| {
                let iv = compose(c, column)?;
                Ok(RobustnessInterval {
                    l: acc.l.min(iv.l),
                    h: acc.h.min(iv.h),
                })
            },
        ),
        Expr::Or(cs) => cs.iter().try_fold(
            RobustnessInterval::point(f64::NEG_INFINITY),
            |acc, c| {
                let iv = compose(c, column)?;
                Ok(RobustnessInterval {
                    l: acc.l.max(iv.l),
                    h: acc.h.max(iv.h),
                })
            },
        ),
    }
}

/// [`compose`] applied to every column of `m`.
pub fn compose_all(expr: &Expr, m: &IntervalMatrix) -> Result<Vec<RobustnessInterval>> {
    let (lo, hi) = m.compose_bounds(expr)?;
    Ok(lo
        .into_iter()
        .zip(hi)
        .map(|(l, h)| RobustnessInterval { l, h })
        .collect())
}
