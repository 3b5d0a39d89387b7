//! Signal temporal logic over a fixed library of atoms.
//!
//! Expressions are Boolean combinations (`not`, n-ary `and`/`or`) of atoms,
//! where each atom is a temporal predicate over the full trajectory such as
//! "eventually inside box B". Robustness follows the usual quantitative
//! semantics: negation flips the sign, conjunction takes the minimum and
//! disjunction the maximum.

mod atom;
mod cnf;
mod expr;
mod robustness;
mod sexpr;
mod trajectory;
mod truth;

pub use atom::{Atom, AtomKind, AtomSet, BoxRegion, MAX_ATOMS};
pub use cnf::{simplify_cnf, trivial_penalty};
pub use expr::Expr;
pub use robustness::{robustness, satisfies};
pub use sexpr::{parse_sexpr, pretty_tree, to_sexpr};
pub use trajectory::Trajectory;
pub use truth::{truth_table, TruthTable, MAX_TRUTH_TABLE_ATOMS};

/// Node count of the tree.
pub fn length_penalty(expr: &Expr) -> usize {
    expr.len()
}
