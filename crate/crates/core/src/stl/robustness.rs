use super::{AtomSet, Expr, Trajectory};
use crate::error::{Error, Result};

/// Quantitative robustness of `expr` on `x`: negation flips the sign, `and`
/// is the minimum and `or` the maximum over children. ⊤ is `+inf`, ⊥ `-inf`.
pub fn robustness(expr: &Expr, atoms: &AtomSet, x: &Trajectory) -> Result<f64> {
    if let Some(i) = expr.max_atom() {
        if i >= atoms.len() {
            return Err(Error::invalid(format!(
                "expression references atom {} but only {} atoms exist",
                i + 1,
                atoms.len()
            )));
        }
    }
    // Only evaluate atoms the expression uses.
    let mut values = vec![0.0; atoms.len()];
    let mut used = vec![false; atoms.len()];
    mark(expr, &mut used);
    for (i, atom) in atoms.iter().enumerate() {
        if used[i] {
            values[i] = atom.robustness(x)?;
        }
    }
    Ok(expr.eval_robustness(&values))
}

fn mark(e: &Expr, used: &mut [bool]) {
    match e {
        Expr::Atom(i) => used[*i] = true,
        _ => e.children().iter().for_each(|c| mark(c, used)),
    }
}

/// `x ⊨ expr` iff robustness is strictly positive.
pub fn satisfies(expr: &Expr, atoms: &AtomSet, x: &Trajectory) -> Result<bool> {
    Ok(robustness(expr, atoms, x)? > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::{Atom, BoxRegion};

    // Atoms whose robustness on the single-state trajectory at x = 0 equals a
    // chosen value r: a box spanning [-r, 10] with huge y extent yields margin r.
    fn fixture(values: &[f64]) -> (AtomSet, Trajectory) {
        let atoms = values
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let (lo, hi) = if r >= 0.0 { (-r, 10.0) } else { (-r, -r + 10.0) };
                let b = BoxRegion::new([lo, -100.0], [hi, 100.0]).unwrap();
                Atom::eventually_in_box(format!("b{i}"), b)
            })
            .collect();
        let x = Trajectory::new("x", vec![vec![0.0, 0.0]]).unwrap();
        (AtomSet::new(atoms).unwrap(), x)
    }

    #[test]
    fn fixture_values() {
        let (atoms, x) = fixture(&[0.3, -0.4]);
        let v = atoms.robustness_vector(&x).unwrap();
        assert!((v[0] - 0.3).abs() < 1e-12);
        assert!((v[1] + 0.4).abs() < 1e-12);
    }

    #[test]
    fn recursive_rules() {
        let (atoms, x) = fixture(&[0.2, 0.7]);
        let r = |e: &Expr| robustness(e, &atoms, &x).unwrap();
        assert!((r(&Expr::not(Expr::atom(0))) + 0.2).abs() < 1e-12);
        assert!((r(&Expr::and([Expr::atom(0), Expr::atom(1)])) - 0.2).abs() < 1e-12);
        let e = Expr::or([Expr::not(Expr::atom(0)), Expr::atom(1)]);
        assert!((r(&e) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn negation_of_point_three() {
        let (atoms, x) = fixture(&[0.3]);
        let r = robustness(&Expr::not(Expr::atom(0)), &atoms, &x).unwrap();
        assert!((r + 0.3).abs() < 1e-12);
    }

    #[test]
    fn strict_satisfaction() {
        let (atoms, x) = fixture(&[0.5, -0.1, 0.0]);
        assert!(satisfies(&Expr::atom(0), &atoms, &x).unwrap());
        assert!(!satisfies(&Expr::atom(1), &atoms, &x).unwrap());
        assert_eq!(robustness(&Expr::atom(2), &atoms, &x).unwrap(), 0.0);
        assert!(!satisfies(&Expr::atom(2), &atoms, &x).unwrap());
    }

    #[test]
    fn out_of_range_atom() {
        let (atoms, x) = fixture(&[0.5]);
        assert!(robustness(&Expr::atom(1), &atoms, &x).is_err());
    }

    #[test]
    fn constants() {
        let (atoms, x) = fixture(&[0.5]);
        assert_eq!(robustness(&Expr::top(), &atoms, &x).unwrap(), f64::INFINITY);
        assert_eq!(robustness(&Expr::bottom(), &atoms, &x).unwrap(), f64::NEG_INFINITY);
    }
}
