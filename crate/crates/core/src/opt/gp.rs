use rand::Rng as _;

use super::{argbest, grow, sample_random_expr, tournament, Evaluator, OptimizerConfig};
use crate::error::Result;
use crate::rng::Rng;
use crate::stl::Expr;

const CROSSOVER_TRIES: usize = 4;

fn crossover(a: &Expr, b: &Expr, max_depth: usize, rng: &mut Rng) -> Expr {
    for _ in 0..CROSSOVER_TRIES {
        let i = rng.random_range(0..a.len());
        let j = rng.random_range(0..b.len());
        let donor = b.subtree(j).expect("index within tree");
        let child = a.replace_subtree(i, donor);
        if child.depth() <= max_depth {
            return child;
        }
    }
    a.clone()
}

fn mutate(a: &Expr, atom_count: usize, max_depth: usize, rng: &mut Rng) -> Expr {
    let i = rng.random_range(0..a.len());
    let d = a.depth_of(i).expect("index within tree");
    let fresh = grow(atom_count, d, max_depth, rng);
    a.replace_subtree(i, &fresh)
}

/// Generational GP with tournament selection, subtree crossover, subtree
/// mutation and a single elite. Returns the best initial loss.
pub(super) fn run(ev: &mut Evaluator<'_>, opt: &OptimizerConfig, rng: &mut Rng) -> Result<f64> {
    let m = ev.atom_count();
    let mut pop: Vec<Expr> = (0..opt.population)
        .map(|_| sample_random_expr(m, opt.max_depth, rng))
        .collect();
    let mut scores = ev.score_batch(&pop)?;
    let initial = scores.iter().copied().fold(f64::INFINITY, f64::min);
    ev.log(0);

    for it in 1..=opt.iterations {
        let mut next = Vec::with_capacity(opt.population);
        next.push(pop[argbest(&pop, &scores)].clone());
        while next.len() < opt.population {
            let a = tournament(&pop, &scores, opt.tournament_size, rng);
            let mut child = pop[a].clone();
            if rng.random::<f64>() < opt.crossover_rate {
                let b = tournament(&pop, &scores, opt.tournament_size, rng);
                child = crossover(&child, &pop[b], opt.max_depth, rng);
            }
            if rng.random::<f64>() < opt.mutation_rate {
                child = mutate(&child, m, opt.max_depth, rng);
            }
            next.push(child);
        }
        scores = ev.score_batch(&next)?;
        pop = next;
        ev.log(it);
    }
    Ok(initial)
}
