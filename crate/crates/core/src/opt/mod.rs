//! Interval losses, the total objective and four randomized optimizers over
//! expressions built from a fixed atom library.
//!
//! All optimizers share one [`Evaluator`], which scores candidates against an
//! [`IntervalMatrix`], caches results by expression and tracks the best
//! candidate with a deterministic tie-break. Scoring of a batch may run in
//! parallel; the random stream is consumed only by the proposal steps, so
//! results do not depend on the thread count.

mod ce;
mod eval;
mod ge;
mod gp;
mod loss;
mod sample;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::IntervalMatrix;
use crate::rng::{rng_from, stream};
use crate::stl::Expr;

pub use eval::{Candidate, Evaluator};
pub use loss::{
    linear_loss, matrix_loss, mean_interval_loss, penalty_terms, telex_loss, total_loss, LossConfig,
    LossKind, PENALTY_CAP,
};
pub use sample::{grow, sample_random_expr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[serde(alias = "gp")]
    GeneticProgramming,
    #[serde(alias = "mc")]
    MonteCarlo,
    #[serde(alias = "ge")]
    GrammaticalEvolution,
    #[serde(alias = "ce")]
    CrossEntropy,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::GeneticProgramming,
        Algorithm::MonteCarlo,
        Algorithm::GrammaticalEvolution,
        Algorithm::CrossEntropy,
    ];

    pub fn short(self) -> &'static str {
        match self {
            Algorithm::GeneticProgramming => "gp",
            Algorithm::MonteCarlo => "mc",
            Algorithm::GrammaticalEvolution => "ge",
            Algorithm::CrossEntropy => "ce",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Algorithm::GeneticProgramming => "Genetic programming",
            Algorithm::MonteCarlo => "Monte Carlo",
            Algorithm::GrammaticalEvolution => "Grammatical evolution",
            Algorithm::CrossEntropy => "Cross-entropy",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        Algorithm::ALL
            .into_iter()
            .find(|a| a.short() == s || a.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown optimizer `{s}` (expected one of gp, mc, ge, ce)")))
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::GeneticProgramming => "genetic_programming",
            Algorithm::MonteCarlo => "monte_carlo",
            Algorithm::GrammaticalEvolution => "grammatical_evolution",
            Algorithm::CrossEntropy => "cross_entropy",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    /// Generations for GP, GE and CE.
    pub iterations: usize,
    /// Number of random trees drawn by Monte Carlo.
    pub samples: usize,
    pub population: usize,
    pub max_depth: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub tournament_size: usize,
    /// CE: fraction of each population used to refit the distribution.
    pub elite_fraction: f64,
    /// CE: additive smoothing on production counts.
    pub smoothing: f64,
    /// GE: codons per genome.
    pub genome_length: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::GeneticProgramming,
            iterations: 500,
            samples: 10_000,
            population: 100,
            max_depth: 5,
            crossover_rate: 0.9,
            mutation_rate: 0.2,
            tournament_size: 3,
            elite_fraction: 0.1,
            smoothing: 1.0,
            genome_length: 64,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let budget_zero = match self.algorithm {
            Algorithm::MonteCarlo => self.samples == 0,
            _ => self.iterations == 0,
        };
        if budget_zero {
            return Err(Error::invalid("optimizer budget (iterations or samples) must be positive"));
        }
        if self.population == 0 || self.max_depth == 0 || self.tournament_size == 0 || self.genome_length == 0 {
            return Err(Error::invalid(
                "population, max_depth, tournament_size and genome_length must be positive",
            ));
        }
        for (name, v) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "elite_fraction must lie in (0, 1], got {}",
                self.elite_fraction
            )));
        }
        if !(self.smoothing.is_finite() && self.smoothing >= 0.0) {
            return Err(Error::invalid(format!("smoothing must be nonnegative, got {}", self.smoothing)));
        }
        Ok(())
    }
}

/// One line of the convergence log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub iteration: usize,
    pub evaluations: usize,
    pub best_loss: f64,
    pub best_expr: String,
}

#[derive(Clone, Debug)]
pub struct OptimizeRun {
    pub best: Candidate,
    /// Best loss among the initial population (or the first batch for MC).
    pub initial_best_loss: f64,
    pub evaluations: usize,
    pub unique: usize,
    pub log: Vec<ConvergenceRow>,
}

pub fn optimize(matrix: &IntervalMatrix, loss: &LossConfig, opt: &OptimizerConfig) -> Result<Candidate> {
    Ok(optimize_run(matrix, loss, opt, None)?.best)
}

/// Full run. `observer` sees every expression handed to the fitness function.
pub fn optimize_run<'a>(
    matrix: &'a IntervalMatrix,
    loss: &'a LossConfig,
    opt: &OptimizerConfig,
    observer: Option<&'a mut (dyn FnMut(&Expr) + 'a)>,
) -> Result<OptimizeRun> {
    opt.validate()?;
    loss.validate()?;
    if matrix.is_empty() || matrix.atom_count() == 0 {
        return Err(Error::invalid("cannot optimize over an empty interval matrix"));
    }
    let mut rng = rng_from(opt.seed, &[stream::OPTIMIZE]);
    let mut ev = Evaluator::new(matrix, loss, opt.max_depth, observer);
    let initial = match opt.algorithm {
        Algorithm::MonteCarlo => monte_carlo(&mut ev, opt, &mut rng)?,
        Algorithm::GeneticProgramming => gp::run(&mut ev, opt, &mut rng)?,
        Algorithm::GrammaticalEvolution => ge::run(&mut ev, opt, &mut rng)?,
        Algorithm::CrossEntropy => ce::run(&mut ev, opt, &mut rng)?,
    };
    ev.finish(initial)
}

const MC_BATCH: usize = 500;

fn monte_carlo(ev: &mut Evaluator<'_>, opt: &OptimizerConfig, rng: &mut crate::rng::Rng) -> Result<f64> {
    let m = ev.atom_count();
    let mut remaining = opt.samples;
    let mut initial = None;
    let mut iteration = 0;
    while remaining > 0 {
        let n = remaining.min(MC_BATCH);
        let batch: Vec<Expr> = (0..n).map(|_| sample_random_expr(m, opt.max_depth, rng)).collect();
        let scores = ev.score_batch(&batch)?;
        initial.get_or_insert_with(|| scores.iter().copied().fold(f64::INFINITY, f64::min));
        remaining -= n;
        ev.log(iteration);
        iteration += 1;
    }
    Ok(initial.unwrap_or(f64::INFINITY))
}

/// Writes the convergence log as CSV.
pub fn write_convergence_csv<W: Write>(rows: &[ConvergenceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::invalid(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| Error::io("<convergence log>", e))?;
    Ok(())
}

/// Index of the best entry by `(loss, length, position)`.
pub(crate) fn argbest(exprs: &[Expr], scores: &[f64]) -> usize {
    (0..exprs.len())
        .min_by(|&a, &b| {
            scores[a]
                .total_cmp(&scores[b])
                .then(exprs[a].len().cmp(&exprs[b].len()))
                .then(a.cmp(&b))
        })
        .expect("nonempty population")
}

/// Tournament selection with replacement.
pub(crate) fn tournament(exprs: &[Expr], scores: &[f64], size: usize, rng: &mut crate::rng::Rng) -> usize {
    use rand::Rng as _;
    let mut best = rng.random_range(0..exprs.len());
    for _ in 1..size {
        let c = rng.random_range(0..exprs.len());
        let better = scores[c]
            .total_cmp(&scores[best])
            .then(exprs[c].len().cmp(&exprs[best].len()))
            .then(c.cmp(&best))
            .is_lt();
        if better {
            best = c;
        }
    }
    best
}
