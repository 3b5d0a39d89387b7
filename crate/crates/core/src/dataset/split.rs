use std::sync::Mutex;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from, stream};

pub const EVEN_SPLIT: [f64; 5] = [0.2; 5];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    Train,
    Cal1,
    Test,
    Cal2,
    Val,
}

impl SplitName {
    pub const ALL: [SplitName; 5] = [
        SplitName::Train,
        SplitName::Cal1,
        SplitName::Test,
        SplitName::Cal2,
        SplitName::Val,
    ];
}

/// Disjoint index sets covering the dataset. Each set is sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitDataset {
    pub train: Vec<usize>,
    pub cal1: Vec<usize>,
    pub test: Vec<usize>,
    pub cal2: Vec<usize>,
    pub val: Vec<usize>,
}

impl SplitDataset {
    pub fn part(&self, name: SplitName) -> &[usize] {
        match name {
            SplitName::Train => &self.train,
            SplitName::Cal1 => &self.cal1,
            SplitName::Test => &self.test,
            SplitName::Cal2 => &self.cal2,
            SplitName::Val => &self.val,
        }
    }

    pub fn sizes(&self) -> [usize; 5] {
        SplitName::ALL.map(|n| self.part(n).len())
    }

    pub fn total(&self) -> usize {
        self.sizes().iter().sum()
    }
}

/// Records which stage read which part of a split.
#[derive(Debug)]
pub struct SplitAccess<'a> {
    split: &'a SplitDataset,
    log: Mutex<Vec<(&'static str, SplitName)>>,
}

impl<'a> SplitAccess<'a> {
    pub fn new(split: &'a SplitDataset) -> Self {
        Self {
            split,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn take(&self, stage: &'static str, name: SplitName) -> &'a [usize] {
        let mut log = self.log.lock().unwrap_or_else(|e| e.into_inner());
        if !log.contains(&(stage, name)) {
            log.push((stage, name));
        }
        self.split.part(name)
    }

    /// Distinct `(stage, part)` reads in first-access order.
    pub fn log(&self) -> Vec<(&'static str, SplitName)> {
        self.log.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn parts_read_by(&self, stage: &str) -> Vec<SplitName> {
        self.log().into_iter().filter(|(s, _)| *s == stage).map(|(_, p)| p).collect()
    }
}

/// Largest-remainder allocation of `n` items by `fractions`.
fn allocate(n: usize, fractions: &[f64; 5]) -> [usize; 5] {
    let exact = fractions.map(|f| f * n as f64);
    let mut sizes = exact.map(|e| e.floor() as usize);
    let mut left = n - sizes.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..5).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    sizes
}

/// Uniformly random partition of `0..n` into train/cal1/test/cal2/val.
pub fn split(n: usize, fractions: [f64; 5], seed: u64) -> Result<SplitDataset> {
    if fractions.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
        return Err(Error::invalid(format!("split fractions {fractions:?} must be positive")));
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!("split fractions sum to {sum}, expected 1")));
    }
    let sizes = allocate(n, &fractions);
    if sizes.contains(&0) {
        return Err(Error::invalid(format!(
            "split of {n} items by {fractions:?} leaves an empty part"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from(seed, &[stream::SPLIT]));
    let mut parts = Vec::with_capacity(5);
    let mut start = 0;
    for s in sizes {
        let mut part = idx[start..start + s].to_vec();
        part.sort_unstable();
        parts.push(part);
        start += s;
    }
    let mut it = parts.into_iter();
    let mut next = || it.next().unwrap();
    Ok(SplitDataset {
        train: next(),
        cal1: next(),
        test: next(),
        cal2: next(),
        val: next(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn even_split_sizes() {
        assert_eq!(split(2000, EVEN_SPLIT, 1).unwrap().sizes(), [400; 5]);
        assert_eq!(split(5, EVEN_SPLIT, 1).unwrap().sizes(), [1; 5]);
        assert!(split(4, EVEN_SPLIT, 1).is_err());
    }

    #[test]
    fn reshuffles_with_seed() {
        let base = split(100, EVEN_SPLIT, 0).unwrap();
        for seed in 1..=10 {
            assert_ne!(split(100, EVEN_SPLIT, seed).unwrap(), base);
        }
        assert_eq!(split(100, EVEN_SPLIT, 0).unwrap(), base);
    }

    #[test]
    fn bad_fractions() {
        assert!(split(100, [0.5, 0.5, 0.0, 0.0, 0.0], 0).is_err());
        assert!(split(100, [0.3; 5], 0).is_err());
        assert!(split(100, [0.96, 0.01, 0.01, 0.01, 0.01], 0).is_ok());
        assert!(split(10, [0.96, 0.01, 0.01, 0.01, 0.01], 0).is_err());
    }

    proptest! {
        #[test]
        fn partition_is_disjoint_and_covering(
            n in 5usize..400,
            raw in prop::array::uniform5(1u32..100),
            seed in any::<u64>(),
        ) {
            let total: u32 = raw.iter().sum();
            let fr = raw.map(|r| r as f64 / total as f64);
            if let Ok(s) = split(n, fr, seed) {
                let mut all: Vec<usize> = SplitName::ALL.iter().flat_map(|p| s.part(*p).to_vec()).collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
                prop_assert!(s.sizes().iter().all(|&k| k > 0));
            } else {
                prop_assert!(allocate(n, &fr).contains(&0));
            }
        }
    }
}
