use rand::Rng as _;

use super::{Evaluator, OptimizerConfig};
use crate::error::Result;
use crate::rng::Rng;
use crate::stl::Expr;

const LEAF: usize = 0;
const NOT: usize = 1;
const AND: usize = 2;
const OR: usize = 3;

/// Production weights per depth: `rules[d]` over leaf/not/and/or for depths
/// below the cap, `atoms[d]` over atom indices for every depth.
#[derive(Clone, Debug)]
struct Distribution {
    rules: Vec<[f64; 4]>,
    atoms: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
struct Counts {
    rules: Vec<[f64; 4]>,
    atoms: Vec<Vec<f64>>,
}

fn draw(weights: &[f64], rng: &mut Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut r = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if r < *w {
            return i;
        }
        r -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

impl Distribution {
    /// Starts from the same depth-dependent leaf probability as the
    /// uniform sampler.
    fn initial(atom_count: usize, max_depth: usize) -> Self {
        let rules = (1..max_depth)
            .map(|d| {
                let leaf = d as f64 / max_depth as f64;
                let op = (1.0 - leaf) / 3.0;
                [leaf, op, op, op]
            })
            .collect();
        let atoms = vec![vec![1.0 / atom_count as f64; atom_count]; max_depth];
        Self { rules, atoms }
    }

    fn empty_counts(&self) -> Counts {
        Counts {
            rules: vec![[0.0; 4]; self.rules.len()],
            atoms: vec![vec![0.0; self.atoms[0].len()]; self.atoms.len()],
        }
    }

    fn sample(&self, depth: usize, counts: &mut Counts, rng: &mut Rng) -> Expr {
        let d = depth - 1;
        let rule = if d < self.rules.len() {
            let r = draw(&self.rules[d], rng);
            counts.rules[d][r] += 1.0;
            r
        } else {
            LEAF
        };
        match rule {
            LEAF => {
                let a = draw(&self.atoms[d], rng);
                counts.atoms[d][a] += 1.0;
                Expr::atom(a)
            }
            NOT => Expr::not(self.sample(depth + 1, counts, rng)),
            AND | OR => {
                let a = self.sample(depth + 1, counts, rng);
                let b = self.sample(depth + 1, counts, rng);
                if rule == AND {
                    Expr::and([a, b])
                } else {
                    Expr::or([a, b])
                }
            }
            _ => unreachable!(),
        }
    }

    /// Refit from elite counts with additive smoothing. Depths no elite
    /// reached keep their weights when there is no smoothing mass.
    fn refit(&mut self, elite: &[&Counts], smoothing: f64) {
        fn normalize(dst: &mut [f64], counts: impl Iterator<Item = f64>, smoothing: f64) {
            let v: Vec<f64> = counts.map(|c| c + smoothing).collect();
            let total: f64 = v.iter().sum();
            if total > 0.0 {
                dst.iter_mut().zip(&v).for_each(|(d, c)| *d = c / total);
            }
        }
        for d in 0..self.rules.len() {
            let sums = (0..4).map(|r| elite.iter().map(|c| c.rules[d][r]).sum());
            normalize(&mut self.rules[d], sums, smoothing);
        }
        for d in 0..self.atoms.len() {
            let sums = (0..self.atoms[d].len()).map(|a| elite.iter().map(|c| c.atoms[d][a]).sum());
            normalize(&mut self.atoms[d], sums, smoothing);
        }
    }
}

/// Cross-entropy method over per-depth production weights.
pub(super) fn run(ev: &mut Evaluator<'_>, opt: &OptimizerConfig, rng: &mut Rng) -> Result<f64> {
    let m = ev.atom_count();
    let mut dist = Distribution::initial(m, opt.max_depth);
    let n_elite = ((opt.elite_fraction * opt.population as f64).ceil() as usize).clamp(1, opt.population);
    let mut initial = None;

    for it in 0..opt.iterations {
        let mut exprs = Vec::with_capacity(opt.population);
        let mut counts = Vec::with_capacity(opt.population);
        for _ in 0..opt.population {
            let mut c = dist.empty_counts();
            exprs.push(dist.sample(1, &mut c, rng));
            counts.push(c);
        }
        let scores = ev.score_batch(&exprs)?;
        initial.get_or_insert_with(|| scores.iter().copied().fold(f64::INFINITY, f64::min));

        let mut order: Vec<usize> = (0..exprs.len()).collect();
        order.sort_by(|&a, &b| {
            scores[a]
                .total_cmp(&scores[b])
                .then(exprs[a].len().cmp(&exprs[b].len()))
                .then(a.cmp(&b))
        });
        let elite: Vec<&Counts> = order[..n_elite].iter().map(|&i| &counts[i]).collect();
        dist.refit(&elite, opt.smoothing);
        ev.log(it);
    }
    Ok(initial.unwrap_or(f64::INFINITY))
}
