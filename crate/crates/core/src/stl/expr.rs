use std::fmt;

use crate::error::{Error, Result};

/// Boolean expression tree over atom indices.
///
/// `And`/`Or` are n-ary. A zero-child `And` is ⊤ and a zero-child `Or` is ⊥;
/// otherwise both carry at least two children. The smart constructors
/// [`Expr::and`] and [`Expr::or`] flatten nested nodes of the same kind.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Atom(usize),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
}

impl Expr {
    pub fn atom(index: usize) -> Self {
        Expr::Atom(index)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Self {
        Expr::Not(Box::new(e))
    }

    pub fn top() -> Self {
        Expr::And(Vec::new())
    }

    pub fn bottom() -> Self {
        Expr::Or(Vec::new())
    }

    pub fn is_top(&self) -> bool {
        matches!(self, Expr::And(c) if c.is_empty())
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, Expr::Or(c) if c.is_empty())
    }

    pub fn is_constant(&self) -> bool {
        self.is_top() || self.is_bottom()
    }

    /// Conjunction of `children`, splicing in children that are themselves
    /// non-constant conjunctions. A single child is returned unchanged.
    pub fn and(children: impl IntoIterator<Item = Expr>) -> Self {
        Self::nary(children, true)
    }

    pub fn or(children: impl IntoIterator<Item = Expr>) -> Self {
        Self::nary(children, false)
    }

    fn nary(children: impl IntoIterator<Item = Expr>, conj: bool) -> Self {
        let mut flat = Vec::new();
        for c in children {
            match c {
                Expr::And(inner) if conj && inner.len() >= 2 => flat.extend(inner),
                Expr::Or(inner) if !conj && inner.len() >= 2 => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            return flat.pop().unwrap();
        }
        if conj {
            Expr::And(flat)
        } else {
            Expr::Or(flat)
        }
    }

    /// Total number of nodes. Constants count as one node.
    pub fn len(&self) -> usize {
        match self {
            Expr::Atom(_) => 1,
            Expr::Not(c) => 1 + c.len(),
            Expr::And(cs) | Expr::Or(cs) => 1 + cs.iter().map(Expr::len).sum::<usize>(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// A single leaf has depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Expr::Atom(_) => 1,
            Expr::Not(c) => 1 + c.depth(),
            Expr::And(cs) | Expr::Or(cs) => 1 + cs.iter().map(Expr::depth).max().unwrap_or(0),
        }
    }

    pub fn children(&self) -> &[Expr] {
        match self {
            Expr::Atom(_) => &[],
            Expr::Not(c) => std::slice::from_ref(c),
            Expr::And(cs) | Expr::Or(cs) => cs,
        }
    }

    /// Checks leaf indices against `atom_count` and the arity rules.
    pub fn validate(&self, atom_count: usize) -> Result<()> {
        match self {
            Expr::Atom(i) if *i >= atom_count => Err(Error::invalid(format!(
                "atom index {i} out of range for {atom_count} atoms"
            ))),
            Expr::Atom(_) => Ok(()),
            Expr::Not(c) => c.validate(atom_count),
            Expr::And(cs) | Expr::Or(cs) => {
                if cs.len() == 1 {
                    return Err(Error::invalid("and/or node with a single child"));
                }
                cs.iter().try_for_each(|c| c.validate(atom_count))
            }
        }
    }

    /// Largest atom index referenced, if any.
    pub fn max_atom(&self) -> Option<usize> {
        match self {
            Expr::Atom(i) => Some(*i),
            _ => self.children().iter().filter_map(Expr::max_atom).max(),
        }
    }

    /// Robustness from precomputed atom robustness values.
    pub fn eval_robustness(&self, atoms: &[f64]) -> f64 {
        match self {
            Expr::Atom(i) => atoms[*i],
            Expr::Not(c) => -c.eval_robustness(atoms),
            Expr::And(cs) => cs
                .iter()
                .map(|c| c.eval_robustness(atoms))
                .fold(f64::INFINITY, f64::min),
            Expr::Or(cs) => cs
                .iter()
                .map(|c| c.eval_robustness(atoms))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Boolean value under an assignment given as a bit mask over atoms.
    pub fn eval_bool(&self, assignment: u64) -> bool {
        match self {
            Expr::Atom(i) => assignment >> i & 1 == 1,
            Expr::Not(c) => !c.eval_bool(assignment),
            Expr::And(cs) => cs.iter().all(|c| c.eval_bool(assignment)),
            Expr::Or(cs) => cs.iter().any(|c| c.eval_bool(assignment)),
        }
    }

    /// Pre-order reference to node `index` (root is 0).
    pub fn subtree(&self, index: usize) -> Option<&Expr> {
        fn walk<'a>(e: &'a Expr, target: usize, next: &mut usize) -> Option<&'a Expr> {
            if *next == target {
                return Some(e);
            }
            *next += 1;
            e.children().iter().find_map(|c| walk(c, target, next))
        }
        walk(self, index, &mut 0)
    }

    /// Depth (root = 1) of pre-order node `index`.
    pub fn depth_of(&self, index: usize) -> Option<usize> {
        fn walk(e: &Expr, target: usize, next: &mut usize, depth: usize) -> Option<usize> {
            if *next == target {
                return Some(depth);
            }
            *next += 1;
            e.children()
                .iter()
                .find_map(|c| walk(c, target, next, depth + 1))
        }
        walk(self, index, &mut 0, 1)
    }

    /// Copy of `self` with pre-order node `index` replaced by `replacement`.
    /// The result is re-flattened. Out-of-range indices return a clone.
    pub fn replace_subtree(&self, index: usize, replacement: &Expr) -> Expr {
        fn walk(e: &Expr, target: usize, next: &mut usize, rep: &Expr) -> Expr {
            if *next == target {
                *next += e.len();
                return rep.clone();
            }
            *next += 1;
            match e {
                Expr::Atom(i) => Expr::Atom(*i),
                Expr::Not(c) => Expr::not(walk(c, target, next, rep)),
                Expr::And(cs) => Expr::and(cs.iter().map(|c| walk(c, target, next, rep)).collect::<Vec<_>>()),
                Expr::Or(cs) => Expr::or(cs.iter().map(|c| walk(c, target, next, rep)).collect::<Vec<_>>()),
            }
        }
        walk(self, index, &mut 0, replacement)
    }
}

impl fmt::Display for Expr {
    /// Index-based S-expression, e.g. `(and phi1 (not phi2))` with 1-based
    /// atom numbers. Use [`super::to_sexpr`] for the label-based form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Atom(i) => write!(f, "phi{}", i + 1),
            Expr::Not(c) => write!(f, "(not {c})"),
            Expr::And(cs) | Expr::Or(cs) => {
                let op = if matches!(self, Expr::And(_)) { "and" } else { "or" };
                write!(f, "({op}")?;
                for c in cs {
                    write!(f, " {c}")?;
                }
                write!(f, ")")
            }
        }
    }
}
