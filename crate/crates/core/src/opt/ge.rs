use rand::Rng as _;

use super::{argbest, tournament, Evaluator, OptimizerConfig};
use crate::error::Result;
use crate::rng::Rng;
use crate::stl::Expr;

/// Productions of the expression grammar, selected by `codon % 4`.
const RULES: u32 = 4;
const CODON_RANGE: u32 = 1 << 16;

struct Decoder<'g> {
    genome: &'g [u32],
    pos: usize,
    atom_count: usize,
    max_depth: usize,
}

impl Decoder<'_> {
    fn next(&mut self) -> u32 {
        // Wrapping reuses the genome; the depth cap bounds the tree.
        let c = self.genome[self.pos % self.genome.len()];
        self.pos += 1;
        c
    }

    fn leaf(&mut self) -> Expr {
        Expr::atom(self.next() as usize % self.atom_count)
    }

    fn expand(&mut self, depth: usize) -> Expr {
        if depth >= self.max_depth {
            return self.leaf();
        }
        match self.next() % RULES {
            0 => self.leaf(),
            1 => Expr::not(self.expand(depth + 1)),
            2 => {
                let a = self.expand(depth + 1);
                Expr::and([a, self.expand(depth + 1)])
            }
            _ => {
                let a = self.expand(depth + 1);
                Expr::or([a, self.expand(depth + 1)])
            }
        }
    }
}

pub(crate) fn decode(genome: &[u32], atom_count: usize, max_depth: usize) -> Expr {
    Decoder {
        genome,
        pos: 0,
        atom_count,
        max_depth,
    }
    .expand(1)
}

fn random_genome(len: usize, rng: &mut Rng) -> Vec<u32> {
    (0..len).map(|_| rng.random_range(0..CODON_RANGE)).collect()
}

/// GE over integer genomes: tournament selection, one-point crossover,
/// point mutation and a single elite.
pub(super) fn run(ev: &mut Evaluator<'_>, opt: &OptimizerConfig, rng: &mut Rng) -> Result<f64> {
    let m = ev.atom_count();
    let len = opt.genome_length;
    let mut genomes: Vec<Vec<u32>> = (0..opt.population).map(|_| random_genome(len, rng)).collect();
    let mut exprs: Vec<Expr> = genomes.iter().map(|g| decode(g, m, opt.max_depth)).collect();
    let mut scores = ev.score_batch(&exprs)?;
    let initial = scores.iter().copied().fold(f64::INFINITY, f64::min);
    ev.log(0);

    for it in 1..=opt.iterations {
        let mut next = Vec::with_capacity(opt.population);
        next.push(genomes[argbest(&exprs, &scores)].clone());
        while next.len() < opt.population {
            let a = tournament(&exprs, &scores, opt.tournament_size, rng);
            let mut child = genomes[a].clone();
            if len > 1 && rng.random::<f64>() < opt.crossover_rate {
                let b = tournament(&exprs, &scores, opt.tournament_size, rng);
                let cut = rng.random_range(1..len);
                child[cut..].copy_from_slice(&genomes[b][cut..]);
            }
            if rng.random::<f64>() < opt.mutation_rate {
                let p = rng.random_range(0..len);
                child[p] = rng.random_range(0..CODON_RANGE);
            }
            next.push(child);
        }
        genomes = next;
        exprs = genomes.iter().map(|g| decode(g, m, opt.max_depth)).collect();
        scores = ev.score_batch(&exprs)?;
        ev.log(it);
    }
    Ok(initial)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoding_follows_codons() {
        // or(atom 2, not(atom 0)) under a roomy depth cap.
        let g = [3, 0, 2, 1, 0, 5];
        let e = decode(&g, 5, 5);
        assert_eq!(e, Expr::or([Expr::atom(2), Expr::not(Expr::atom(0))]));
    }

    #[test]
    fn depth_cap_forces_leaves() {
        let g = [2; 8];
        let e = decode(&g, 3, 1);
        assert_eq!(e, Expr::atom(2));
        let e = decode(&g, 3, 3);
        assert!(e.depth() <= 3);
    }
}
