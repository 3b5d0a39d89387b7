use rand::Rng;

use crate::stl::Expr;

/// Random tree whose root sits at `depth` (1-based) under a cap of
/// `max_depth`. A node at depth `d` is a leaf with probability `d/max_depth`;
/// otherwise its operator is drawn uniformly from not/and/or.
pub fn grow<R: Rng + ?Sized>(atom_count: usize, depth: usize, max_depth: usize, rng: &mut R) -> Expr {
    if depth >= max_depth || rng.random::<f64>() < depth as f64 / max_depth as f64 {
        return Expr::atom(rng.random_range(0..atom_count));
    }
    match rng.random_range(0..3) {
        0 => Expr::not(grow(atom_count, depth + 1, max_depth, rng)),
        1 => Expr::and([
            grow(atom_count, depth + 1, max_depth, rng),
            grow(atom_count, depth + 1, max_depth, rng),
        ]),
        _ => Expr::or([
            grow(atom_count, depth + 1, max_depth, rng),
            grow(atom_count, depth + 1, max_depth, rng),
        ]),
    }
}

pub fn sample_random_expr<R: Rng + ?Sized>(atom_count: usize, max_depth: usize, rng: &mut R) -> Expr {
    assert!(atom_count >= 1 && max_depth >= 1, "need at least one atom and depth 1");
    grow(atom_count, 1, max_depth, rng)
}
