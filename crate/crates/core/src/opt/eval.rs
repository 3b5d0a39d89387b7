use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;

use super::loss::{mean_interval_loss, penalty_terms, PENALTY_CAP};
use super::{ConvergenceRow, LossConfig, OptimizeRun};
use crate::error::{Error, Result};
use crate::interval::IntervalMatrix;
use crate::stl::Expr;

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub expr: Expr,
    pub loss: f64,
    /// Mean composed lower bound over the scored columns.
    pub mean_l: f64,
    pub mean_h: f64,
    /// Position in the evaluation sequence (0-based).
    pub order: usize,
}

impl Candidate {
    /// Ordering used to pick winners: loss, then size, then age.
    pub fn rank_cmp(&self, other: &Candidate) -> Ordering {
        self.loss
            .total_cmp(&other.loss)
            .then(self.expr.len().cmp(&other.expr.len()))
            .then(self.order.cmp(&other.order))
    }
}

#[derive(Clone, Copy, Debug)]
struct Scored {
    loss: f64,
    mean_l: f64,
    mean_h: f64,
}

fn score(matrix: &IntervalMatrix, cfg: &LossConfig, expr: &Expr) -> Scored {
    let (lo, hi) = matrix
        .compose_bounds(expr)
        .expect("candidates are validated before scoring");
    let n = lo.len() as f64;
    let loss = mean_interval_loss(&lo, &hi, cfg) + penalty_terms(expr, cfg);
    Scored {
        loss: if loss.is_finite() { loss.min(PENALTY_CAP) } else { PENALTY_CAP },
        mean_l: lo.iter().sum::<f64>() / n,
        mean_h: hi.iter().sum::<f64>() / n,
    }
}

pub struct Evaluator<'a> {
    matrix: &'a IntervalMatrix,
    loss: &'a LossConfig,
    max_depth: usize,
    cache: HashMap<Expr, Scored>,
    evaluations: usize,
    best: Option<Candidate>,
    log: Vec<ConvergenceRow>,
    observer: Option<&'a mut (dyn FnMut(&Expr) + 'a)>,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        matrix: &'a IntervalMatrix,
        loss: &'a LossConfig,
        max_depth: usize,
        observer: Option<&'a mut (dyn FnMut(&Expr) + 'a)>,
    ) -> Self {
        Self {
            matrix,
            loss,
            max_depth,
            cache: HashMap::new(),
            evaluations: 0,
            best: None,
            log: Vec::new(),
            observer,
        }
    }

    pub fn atom_count(&self) -> usize {
        self.matrix.atom_count()
    }

    pub fn best(&self) -> Option<&Candidate> {
        self.best.as_ref()
    }

    /// Scores a batch in order and returns the losses.
    pub fn score_batch(&mut self, exprs: &[Expr]) -> Result<Vec<f64>> {
        let m = self.atom_count();
        for e in exprs {
            if let Some(obs) = self.observer.as_mut() {
                obs(e);
            }
            e.validate(m)?;
            if e.depth() > self.max_depth {
                return Err(Error::invalid(format!(
                    "optimizer produced a tree of depth {} above the cap {}",
                    e.depth(),
                    self.max_depth
                )));
            }
        }
        let mut fresh: Vec<&Expr> = exprs.iter().filter(|e| !self.cache.contains_key(*e)).collect();
        fresh.sort();
        fresh.dedup();
        let scored: Vec<Scored> = {
            let (matrix, loss) = (self.matrix, self.loss);
            fresh.par_iter().map(|e| score(matrix, loss, e)).collect()
        };
        for (e, s) in fresh.into_iter().zip(scored) {
            self.cache.insert(e.clone(), s);
        }

        let mut out = Vec::with_capacity(exprs.len());
        for e in exprs {
            let s = self.cache[e];
            let cand = Candidate {
                expr: e.clone(),
                loss: s.loss,
                mean_l: s.mean_l,
                mean_h: s.mean_h,
                order: self.evaluations,
            };
            self.evaluations += 1;
            if self.best.as_ref().is_none_or(|b| cand.rank_cmp(b).is_lt()) {
                self.best = Some(cand);
            }
            out.push(s.loss);
        }
        Ok(out)
    }

    pub fn log(&mut self, iteration: usize) {
        if let Some(b) = &self.best {
            self.log.push(ConvergenceRow {
                iteration,
                evaluations: self.evaluations,
                best_loss: b.loss,
                best_expr: b.expr.to_string(),
            });
        }
    }

    pub(crate) fn finish(self, initial_best_loss: f64) -> Result<OptimizeRun> {
        let best = self
            .best
            .ok_or_else(|| Error::invalid("optimizer evaluated no candidates"))?;
        Ok(OptimizeRun {
            best,
            initial_best_loss,
            evaluations: self.evaluations,
            unique: self.cache.len(),
            log: self.log,
        })
    }
}
