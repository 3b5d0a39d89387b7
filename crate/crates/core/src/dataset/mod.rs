//! Trajectory datasets: synthetic generation, partial noisy observations,
//! the five-way split and file storage.

mod generate;
mod io;
mod split;

pub use generate::{generate, GeneratorConfig, Route};
pub use io::{load, load_or, load_with, save, Format};
pub use split::{split, SplitAccess, SplitDataset, SplitName, EVEN_SPLIT};

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::{rng_from, stream};
use crate::stl::Trajectory;

/// Noisy prefix of a trajectory: the input of every robustness predictor.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub source_id: String,
    pub prefix: Trajectory,
}

impl Observation {
    /// Flattened prefix, `T_obs * d` values.
    pub fn features(&self) -> &[f64] {
        self.prefix.as_flat()
    }
}

/// How observations are derived from the stored trajectories.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationSpec {
    pub fraction: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for ObservationSpec {
    fn default() -> Self {
        Self {
            fraction: 0.5,
            noise_std: 0.05,
            seed: 0,
        }
    }
}

impl ObservationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.fraction > 0.0 && self.fraction < 1.0) {
            return Err(Error::Config(format!(
                "observation fraction {} must lie in (0, 1)",
                self.fraction
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Config(format!(
                "noise_std {} must be finite and >= 0",
                self.noise_std
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub t_len: usize,
    pub t_obs: usize,
    pub dim: usize,
    pub observation: ObservationSpec,
    /// Seed of the generator that produced the trajectories, if synthetic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator_seed: Option<u64>,
}

/// Number of observed states for a trajectory of length `t_len`.
pub fn observed_len(t_len: usize, fraction: f64) -> usize {
    let raw = (fraction * t_len as f64 - 1e-9).ceil().max(1.0) as usize;
    if t_len >= 2 {
        raw.min(t_len - 1)
    } else {
        1
    }
}

/// First `⌈fraction·T⌉` states plus i.i.d. Gaussian noise of scale `noise_std`.
pub fn observe(x: &Trajectory, fraction: f64, noise_std: f64, seed: u64) -> Result<Observation> {
    ObservationSpec {
        fraction,
        noise_std,
        seed,
    }
    .validate()
    .map_err(|e| Error::invalid(e.to_string()))?;
    let t_obs = observed_len(x.len(), fraction);
    let mut data = x.as_flat()[..t_obs * x.dim()].to_vec();
    if noise_std > 0.0 {
        let mut rng = rng_from(seed, &[stream::OBSERVE]);
        let normal = Normal::new(0.0, noise_std).expect("validated scale");
        for v in &mut data {
            *v += normal.sample(&mut rng);
        }
    }
    Ok(Observation {
        source_id: x.id().to_owned(),
        prefix: Trajectory::from_flat(x.id(), x.dim(), data)?,
    })
}

/// Ground-truth trajectories paired with their observations.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    trajectories: Vec<Trajectory>,
    observations: Vec<Observation>,
    meta: DatasetMeta,
}

impl Dataset {
    /// Observation `i` is drawn with a seed derived from `(spec.seed, i)`.
    pub fn new(
        trajectories: Vec<Trajectory>,
        spec: ObservationSpec,
        generator_seed: Option<u64>,
    ) -> Result<Self> {
        spec.validate()?;
        let first = trajectories
            .first()
            .ok_or_else(|| Error::invalid("dataset has no trajectories"))?;
        let (t_len, dim) = (first.len(), first.dim());
        for x in &trajectories {
            if x.len() != t_len || x.dim() != dim {
                return Err(Error::Schema(format!(
                    "trajectory {} has shape {}x{}, expected {t_len}x{dim}",
                    x.id(),
                    x.len(),
                    x.dim()
                )));
            }
        }
        let observations = trajectories
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let seed = crate::rng::derive_seed(spec.seed, &[stream::OBSERVE, i as u64]);
                observe(x, spec.fraction, spec.noise_std, seed)
            })
            .collect::<Result<Vec<_>>>()?;
        let meta = DatasetMeta {
            t_len,
            t_obs: observed_len(t_len, spec.fraction),
            dim,
            observation: spec,
            generator_seed,
        };
        Ok(Self {
            trajectories,
            observations,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    /// Five-way random split of this dataset's indices.
    pub fn split(&self, fractions: [f64; 5], seed: u64) -> Result<SplitDataset> {
        split(self.len(), fractions, seed)
    }

    /// SHA-256 over the stored trajectories and metadata, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&self.meta).expect("meta serializes"));
        for x in &self.trajectories {
            h.update(x.id().as_bytes());
            h.update([0]);
            for v in x.as_flat() {
                h.update(v.to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(t: usize) -> Trajectory {
        Trajectory::new("x", (0..t).map(|i| vec![i as f64, -(i as f64)]).collect()).unwrap()
    }

    #[test]
    fn prefix_length_is_ceiling() {
        let x = line(20);
        assert_eq!(observe(&x, 0.5, 0.0, 1).unwrap().prefix.len(), 10);
        assert_eq!(observe(&line(5), 0.5, 0.0, 1).unwrap().prefix.len(), 3);
        assert_eq!(observed_len(20, 0.99), 19);
        assert_eq!(observed_len(1, 0.5), 1);
    }

    #[test]
    fn noiseless_prefix_is_exact() {
        let x = line(20);
        let o = observe(&x, 0.5, 0.0, 1).unwrap();
        assert_eq!(o.prefix.as_flat(), &x.as_flat()[..20]);
        assert_eq!(o.source_id, "x");
    }

    #[test]
    fn observation_is_seed_deterministic() {
        let x = line(20);
        let a = observe(&x, 0.5, 0.3, 11).unwrap();
        let b = observe(&x, 0.5, 0.3, 11).unwrap();
        let c = observe(&x, 0.5, 0.3, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a.prefix.as_flat(), &x.as_flat()[..20]);
    }

    #[test]
    fn bad_fraction() {
        assert!(observe(&line(4), 1.0, 0.0, 0).is_err());
        assert!(observe(&line(4), 0.0, 0.0, 0).is_err());
    }

    #[test]
    fn ragged_dataset_rejected() {
        let err = Dataset::new(vec![line(4), line(5)], ObservationSpec::default(), None).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }
}
