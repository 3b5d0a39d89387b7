use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::error::{Error, Result};

/// Upper bound on the number of atoms; CNF clauses are 64-bit literal masks.
pub const MAX_ATOMS: usize = 64;

/// Axis-aligned box `[a1, a2] x [b1, b2]` over two state components.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxRegion {
    /// `(a1, b1)`
    pub low: [f64; 2],
    /// `(a2, b2)`
    pub high: [f64; 2],
}

impl BoxRegion {
    pub fn new(low: [f64; 2], high: [f64; 2]) -> Result<Self> {
        let b = Self { low, high };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.low.iter().chain(&self.high).all(|v| v.is_finite());
        if !finite || self.low[0] >= self.high[0] || self.low[1] >= self.high[1] {
            return Err(Error::invalid(format!(
                "box {:?}-{:?} must satisfy a1 < a2 and b1 < b2",
                self.low, self.high
            )));
        }
        Ok(())
    }

    /// Signed margin of a point: the smallest of the four half-space margins.
    /// Positive strictly inside, zero on the boundary, negative outside.
    #[inline]
    pub fn margin(&self, x: f64, y: f64) -> f64 {
        (x - self.low[0])
            .min(self.high[0] - x)
            .min(y - self.low[1])
            .min(self.high[1] - y)
    }

    pub fn center(&self) -> [f64; 2] {
        [
            0.5 * (self.low[0] + self.high[0]),
            0.5 * (self.low[1] + self.high[1]),
        ]
    }

    /// Box grown by `amount` on every side (shrunk when negative).
    pub fn inflate(&self, amount: f64) -> BoxRegion {
        BoxRegion {
            low: [self.low[0] - amount, self.low[1] - amount],
            high: [self.high[0] + amount, self.high[1] + amount],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomKind {
    /// ◊ inside_box: max over time of the box margin.
    EventuallyInBox,
    /// □ inside_box: min over time of the box margin.
    AlwaysInBox,
    /// □ flag: min over time of `x[c] - 0.5`, for 0/1 flags stored as reals.
    AlwaysFlag,
}

impl AtomKind {
    /// Tag used in the S-expression form.
    pub fn tag(self) -> &'static str {
        match self {
            AtomKind::EventuallyInBox => "ev",
            AtomKind::AlwaysInBox => "alw",
            AtomKind::AlwaysFlag => "flag",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "ev" => Some(AtomKind::EventuallyInBox),
            "alw" => Some(AtomKind::AlwaysInBox),
            "flag" => Some(AtomKind::AlwaysFlag),
            _ => None,
        }
    }
}

fn default_axes() -> [usize; 2] {
    [0, 1]
}

fn is_default_axes(axes: &[usize; 2]) -> bool {
    *axes == default_axes()
}

/// A temporal predicate over the whole trajectory, used as an expression leaf.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub label: String,
    pub kind: AtomKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<BoxRegion>,
    /// State components holding the 2-D position for box kinds.
    #[serde(default = "default_axes", skip_serializing_if = "is_default_axes")]
    pub axes: [usize; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag_component: Option<usize>,
}

impl Atom {
    pub fn eventually_in_box(label: impl Into<String>, region: BoxRegion) -> Self {
        Self::boxed(label, AtomKind::EventuallyInBox, region)
    }

    pub fn always_in_box(label: impl Into<String>, region: BoxRegion) -> Self {
        Self::boxed(label, AtomKind::AlwaysInBox, region)
    }

    pub fn always_flag(label: impl Into<String>, component: usize) -> Self {
        Self {
            label: label.into(),
            kind: AtomKind::AlwaysFlag,
            region: None,
            axes: default_axes(),
            flag_component: Some(component),
        }
    }

    fn boxed(label: impl Into<String>, kind: AtomKind, region: BoxRegion) -> Self {
        Self {
            label: label.into(),
            kind,
            region: Some(region),
            axes: default_axes(),
            flag_component: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let label_ok = !self.label.is_empty()
            && self
                .label
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
        if !label_ok {
            return Err(Error::invalid(format!(
                "atom label {:?} must be a nonempty token of [A-Za-z0-9_.-]",
                self.label
            )));
        }
        match self.kind {
            AtomKind::EventuallyInBox | AtomKind::AlwaysInBox => {
                let region = self.region.as_ref().ok_or_else(|| {
                    Error::invalid(format!("atom {} needs a region", self.label))
                })?;
                region.validate()?;
                if self.axes[0] == self.axes[1] {
                    return Err(Error::invalid(format!(
                        "atom {} uses the same component twice",
                        self.label
                    )));
                }
            }
            AtomKind::AlwaysFlag => {
                if self.flag_component.is_none() {
                    return Err(Error::invalid(format!(
                        "atom {} needs a flag_component",
                        self.label
                    )));
                }
            }
        }
        Ok(())
    }

    /// Smallest state dimension this atom can be evaluated on.
    pub fn required_dim(&self) -> usize {
        match self.kind {
            AtomKind::AlwaysFlag => self.flag_component.unwrap_or(0) + 1,
            _ => self.axes[0].max(self.axes[1]) + 1,
        }
    }

    pub fn robustness(&self, x: &Trajectory) -> Result<f64> {
        if x.dim() < self.required_dim() {
            return Err(Error::invalid(format!(
                "atom {} needs state dimension >= {}, trajectory {} has {}",
                self.label,
                self.required_dim(),
                x.id(),
                x.dim()
            )));
        }
        let [ix, iy] = self.axes;
        Ok(match (self.kind, self.region) {
            (AtomKind::EventuallyInBox, Some(b)) => x
                .states()
                .map(|s| b.margin(s[ix], s[iy]))
                .fold(f64::NEG_INFINITY, f64::max),
            (AtomKind::AlwaysInBox, Some(b)) => x
                .states()
                .map(|s| b.margin(s[ix], s[iy]))
                .fold(f64::INFINITY, f64::min),
            (AtomKind::AlwaysFlag, _) => {
                let c = self.flag_component.unwrap_or(0);
                x.states().map(|s| s[c] - 0.5).fold(f64::INFINITY, f64::min)
            }
            _ => return Err(Error::invalid(format!("atom {} has no region", self.label))),
        })
    }
}

/// Ordered, validated atom library. The position of an atom is its index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Atom>", into = "Vec<Atom>")]
pub struct AtomSet {
    atoms: Vec<Atom>,
}

impl AtomSet {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid("atom set is empty"));
        }
        if atoms.len() > MAX_ATOMS {
            return Err(Error::Capacity(format!(
                "{} atoms exceeds the limit of {MAX_ATOMS}",
                atoms.len()
            )));
        }
        for (i, a) in atoms.iter().enumerate() {
            a.validate()?;
            if atoms[..i]
                .iter()
                .any(|b| b.kind.tag() == a.kind.tag() && b.label == a.label)
            {
                return Err(Error::invalid(format!(
                    "duplicate atom ({} {})",
                    a.kind.tag(),
                    a.label
                )));
            }
        }
        Ok(Self { atoms })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&Atom> {
        self.atoms.get(index)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Atom> {
        self.atoms.iter()
    }

    pub fn as_slice(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn find(&self, kind: AtomKind, label: &str) -> Option<usize> {
        self.atoms
            .iter()
            .position(|a| a.kind == kind && a.label == label)
    }

    /// Robustness of every atom on `x`, indexed by atom.
    pub fn robustness_vector(&self, x: &Trajectory) -> Result<Vec<f64>> {
        self.atoms.iter().map(|a| a.robustness(x)).collect()
    }
}

impl TryFrom<Vec<Atom>> for AtomSet {
    type Error = Error;

    fn try_from(atoms: Vec<Atom>) -> Result<Self> {
        AtomSet::new(atoms)
    }
}

impl From<AtomSet> for Vec<Atom> {
    fn from(set: AtomSet) -> Self {
        set.atoms
    }
}

impl<'a> IntoIterator for &'a AtomSet {
    type Item = &'a Atom;
    type IntoIter = std::slice::Iter<'a, Atom>;

    fn into_iter(self) -> Self::IntoIter {
        self.atoms.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(points: &[[f64; 2]]) -> Trajectory {
        Trajectory::new("t", points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    #[test]
    fn single_state_inside_box() {
        let b = BoxRegion::new([0.0, 0.0], [2.0, 3.0]).unwrap();
        // margins: x-a1 = 1, a2-x = 1, y-b1 = 1, b2-y = 2
        let r = Atom::eventually_in_box("b", b)
            .robustness(&traj(&[[1.0, 1.0]]))
            .unwrap();
        assert_eq!(r, 1.0);
    }

    #[test]
    fn eventually_and_always_over_margin_sequence() {
        // unit-width box in y so the margin is driven by x alone.
        let b = BoxRegion::new([0.0, -10.0], [10.0, 10.0]).unwrap();
        let x = traj(&[[-1.0, 0.0], [0.5, 0.0], [-2.0, 0.0]]);
        assert_eq!(Atom::eventually_in_box("b", b).robustness(&x).unwrap(), 0.5);
        assert_eq!(Atom::always_in_box("b", b).robustness(&x).unwrap(), -2.0);
    }

    #[test]
    fn flag_margin() {
        let x = Trajectory::new("t", vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(Atom::always_flag("f", 2).robustness(&x).unwrap(), 0.5);
        let y = Trajectory::new("t", vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(Atom::always_flag("f", 2).robustness(&y).unwrap(), -0.5);
    }

    #[test]
    fn dimension_mismatch_is_invalid_input() {
        let b = BoxRegion::new([0.0, 0.0], [1.0, 1.0]).unwrap();
        let x = Trajectory::new("t", vec![vec![0.5]]).unwrap();
        assert!(matches!(
            Atom::eventually_in_box("b", b).robustness(&x),
            Err(Error::InvalidInput(_))
        ));
        assert!(Atom::always_flag("f", 3).robustness(&x).is_err());
    }

    #[test]
    fn degenerate_box_rejected() {
        assert!(BoxRegion::new([1.0, 0.0], [1.0, 2.0]).is_err());
        assert!(BoxRegion::new([0.0, 2.0], [1.0, 1.0]).is_err());
    }

    #[test]
    fn atom_set_rules() {
        let b = BoxRegion::new([0.0, 0.0], [1.0, 1.0]).unwrap();
        assert!(AtomSet::new(vec![]).is_err());
        assert!(AtomSet::new(vec![
            Atom::eventually_in_box("a", b),
            Atom::eventually_in_box("a", b)
        ])
        .is_err());
        // same label under different kinds is fine
        let set = AtomSet::new(vec![
            Atom::eventually_in_box("a", b),
            Atom::always_in_box("a", b),
        ])
        .unwrap();
        assert_eq!(set.find(AtomKind::AlwaysInBox, "a"), Some(1));
        assert!(AtomSet::new(vec![Atom::eventually_in_box("has space", b)]).is_err());
    }
}
