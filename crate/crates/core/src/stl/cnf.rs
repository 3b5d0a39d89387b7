//! Conjunctive normal form by rewriting.
//!
//! Clauses are pairs of 64-bit masks (positive and negative literals). The
//! converter pushes negations to the leaves, distributes `or` over `and`, and
//! after every combination step drops tautological clauses (`p ∨ ¬p`),
//! duplicates (idempotence) and subsumed clauses (absorption). The final set
//! is closed under self-subsuming resolution and checked for
//! unsatisfiability, so constant expressions always come back as ⊤ or ⊥.

use std::cmp::Reverse;

use super::Expr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Clause {
    pos: u64,
    neg: u64,
}

impl Clause {
    const EMPTY: Clause = Clause { pos: 0, neg: 0 };

    fn literal(atom: usize, negated: bool) -> Self {
        let bit = 1u64 << atom;
        if negated {
            Clause { pos: 0, neg: bit }
        } else {
            Clause { pos: bit, neg: 0 }
        }
    }

    fn is_tautology(self) -> bool {
        self.pos & self.neg != 0
    }

    fn is_empty(self) -> bool {
        self.pos == 0 && self.neg == 0
    }

    fn width(self) -> u32 {
        self.pos.count_ones() + self.neg.count_ones()
    }

    fn union(self, other: Clause) -> Clause {
        Clause {
            pos: self.pos | other.pos,
            neg: self.neg | other.neg,
        }
    }

    fn subsumes(self, other: Clause) -> bool {
        self.pos & !other.pos == 0 && self.neg & !other.neg == 0
    }

    /// Narrow clauses first, then lexicographic by ascending atom index.
    fn sort_key(self) -> (u32, Reverse<u64>, u64) {
        (self.width(), Reverse((self.pos | self.neg).reverse_bits()), self.neg)
    }
}

/// Drops tautologies, duplicates and subsumed clauses.
fn reduce(mut clauses: Vec<Clause>) -> Vec<Clause> {
    clauses.retain(|c| !c.is_tautology());
    clauses.sort_by_key(|c| c.sort_key());
    clauses.dedup();
    let mut kept: Vec<Clause> = Vec::with_capacity(clauses.len());
    // Sorted by width, so a subsuming clause always precedes the clauses it absorbs.
    for c in clauses {
        if !kept.iter().any(|k| k.subsumes(c)) {
            kept.push(c);
        }
    }
    kept
}

fn to_clauses(e: &Expr, negated: bool) -> Vec<Clause> {
    match e {
        Expr::Atom(i) => vec![Clause::literal(*i, negated)],
        Expr::Not(c) => to_clauses(c, !negated),
        Expr::And(cs) if !negated => conjunction(cs, negated),
        Expr::Or(cs) if negated => conjunction(cs, negated),
        Expr::And(cs) | Expr::Or(cs) => disjunction(cs, negated),
    }
}

fn conjunction(children: &[Expr], negated: bool) -> Vec<Clause> {
    let mut out = Vec::new();
    for c in children {
        out.extend(to_clauses(c, negated));
    }
    reduce(out)
}

fn disjunction(children: &[Expr], negated: bool) -> Vec<Clause> {
    // ⊥ is the identity of disjunction: one empty clause.
    let mut acc = vec![Clause::EMPTY];
    for c in children {
        let rhs = to_clauses(c, negated);
        let mut next = Vec::with_capacity(acc.len() * rhs.len());
        for a in &acc {
            for b in &rhs {
                next.push(a.union(*b));
            }
        }
        acc = reduce(next);
        if acc.is_empty() {
            break;
        }
    }
    acc
}

/// `(C ∨ l) ∧ (D ∨ ¬l)` with `C ⊆ D` lets `¬l` be removed from the second.
fn strengthen(mut clauses: Vec<Clause>) -> Vec<Clause> {
    loop {
        let mut changed = false;
        for i in 0..clauses.len() {
            for j in 0..clauses.len() {
                if i == j {
                    continue;
                }
                let (c, d) = (clauses[i], clauses[j]);
                let clash_pos = c.pos & d.neg;
                let clash_neg = c.neg & d.pos;
                if (clash_pos | clash_neg).count_ones() != 1 || (clash_pos & clash_neg) != 0 {
                    continue;
                }
                let rest = Clause {
                    pos: c.pos & !clash_pos,
                    neg: c.neg & !clash_neg,
                };
                let d_rest = Clause {
                    pos: d.pos & !clash_neg,
                    neg: d.neg & !clash_pos,
                };
                if rest.subsumes(d_rest) {
                    clauses[j] = d_rest;
                    changed = true;
                }
            }
        }
        clauses = reduce(clauses);
        if !changed {
            return clauses;
        }
    }
}

fn satisfiable(clauses: &[Clause]) -> bool {
    if clauses.is_empty() {
        return true;
    }
    if clauses.iter().any(|c| c.is_empty()) {
        return false;
    }
    // Branch on a literal of the shortest clause; unit clauses force it.
    let pick = clauses.iter().min_by_key(|c| c.width()).copied().unwrap();
    let (var, value) = if pick.pos != 0 {
        (pick.pos.trailing_zeros(), true)
    } else {
        (pick.neg.trailing_zeros(), false)
    };
    let try_assign = |value: bool| {
        let bit = 1u64 << var;
        let rest: Vec<Clause> = clauses
            .iter()
            .filter(|c| !(value && c.pos & bit != 0 || !value && c.neg & bit != 0))
            .map(|c| Clause {
                pos: c.pos & !bit,
                neg: c.neg & !bit,
            })
            .collect();
        satisfiable(&rest)
    };
    try_assign(value) || (pick.width() > 1 && try_assign(!value))
}

fn literal_expr(atom: usize, negated: bool) -> Expr {
    if negated {
        Expr::not(Expr::atom(atom))
    } else {
        Expr::atom(atom)
    }
}

fn clause_expr(c: Clause) -> Expr {
    let mut lits = Vec::new();
    for i in 0..64 {
        if c.pos >> i & 1 == 1 {
            lits.push(literal_expr(i, false));
        } else if c.neg >> i & 1 == 1 {
            lits.push(literal_expr(i, true));
        }
    }
    match lits.len() {
        0 => Expr::bottom(),
        1 => lits.pop().unwrap(),
        _ => Expr::Or(lits),
    }
}

/// Equivalent expression in conjunctive normal form. ⊤ is a zero-child `and`,
/// ⊥ a zero-child `or`; single-literal clauses are emitted without a wrapper.
pub fn simplify_cnf(expr: &Expr) -> Expr {
    let clauses = strengthen(to_clauses(expr, false));
    if !satisfiable(&clauses) {
        return Expr::bottom();
    }
    match clauses.len() {
        0 => Expr::top(),
        1 => clause_expr(clauses[0]),
        _ => Expr::And(clauses.into_iter().map(clause_expr).collect()),
    }
}

/// Nodes saved by CNF simplification, never negative.
pub fn trivial_penalty(expr: &Expr) -> usize {
    expr.len().saturating_sub(simplify_cnf(expr).len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::truth_table;

    fn a(i: usize) -> Expr {
        Expr::atom(i)
    }

    fn equivalent(x: &Expr, y: &Expr, m: usize) -> bool {
        truth_table(x, m).unwrap() == truth_table(y, m).unwrap()
    }

    #[test]
    fn complement_law() {
        assert_eq!(simplify_cnf(&Expr::or([a(0), Expr::not(a(0))])), Expr::top());
        assert_eq!(simplify_cnf(&Expr::and([a(0), Expr::not(a(0))])), Expr::bottom());
    }

    #[test]
    fn already_cnf_is_unchanged() {
        let e = Expr::and([a(0), a(1)]);
        assert_eq!(simplify_cnf(&e), e);
    }

    #[test]
    fn distribution() {
        let e = Expr::or([a(0), Expr::and([a(1), a(2)])]);
        let want = Expr::And(vec![Expr::Or(vec![a(0), a(1)]), Expr::Or(vec![a(0), a(2)])]);
        let got = simplify_cnf(&e);
        assert_eq!(got, want);
        assert!(equivalent(&got, &e, 3));
    }

    #[test]
    fn double_negation_and_idempotence() {
        assert_eq!(simplify_cnf(&Expr::not(Expr::not(a(2)))), a(2));
        assert_eq!(simplify_cnf(&Expr::and([a(0), a(0)])), a(0));
        assert_eq!(simplify_cnf(&Expr::or([a(1), a(1), a(1)])), a(1));
    }

    #[test]
    fn absorption_and_resolution() {
        // a ∧ (a ∨ b) = a
        assert_eq!(simplify_cnf(&Expr::and([a(0), Expr::or([a(0), a(1)])])), a(0));
        // (a ∨ b) ∧ (a ∨ ¬b) = a
        let e = Expr::and([Expr::or([a(0), a(1)]), Expr::or([a(0), Expr::not(a(1))])]);
        assert_eq!(simplify_cnf(&e), a(0));
    }

    #[test]
    fn contradiction_without_direct_clash() {
        let (p, q) = (a(0), a(1));
        let (np, nq) = (Expr::not(a(0)), Expr::not(a(1)));
        let e = Expr::and([
            Expr::or([p.clone(), q.clone()]),
            Expr::or([np.clone(), q]),
            Expr::or([p, nq.clone()]),
            Expr::or([np, nq]),
        ]);
        assert_eq!(simplify_cnf(&e), Expr::bottom());
    }

    #[test]
    fn identity_and_annihilator() {
        assert_eq!(simplify_cnf(&Expr::and([a(0), Expr::top()])), a(0));
        assert_eq!(simplify_cnf(&Expr::or([a(0), Expr::bottom()])), a(0));
        assert_eq!(simplify_cnf(&Expr::or([a(0), Expr::top()])), Expr::top());
        assert_eq!(simplify_cnf(&Expr::and([a(0), Expr::bottom()])), Expr::bottom());
        assert_eq!(simplify_cnf(&Expr::not(Expr::top())), Expr::bottom());
    }

    #[test]
    fn penalties() {
        assert_eq!(trivial_penalty(&Expr::and([a(0), a(1)])), 0);
        assert_eq!(trivial_penalty(&Expr::or([a(0), Expr::not(a(0))])), 3);
        assert_eq!(trivial_penalty(&Expr::and([a(0), a(0)])), 2);
        // distribution grows the tree; the penalty is clamped at zero
        assert_eq!(trivial_penalty(&Expr::or([a(0), Expr::and([a(1), a(2)])])), 0);
    }

    #[test]
    fn de_morgan_pushdown() {
        let e = Expr::not(Expr::or([a(0), a(1)]));
        let want = Expr::And(vec![Expr::not(a(0)), Expr::not(a(1))]);
        assert_eq!(simplify_cnf(&e), want);
    }
}
