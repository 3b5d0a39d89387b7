//! The experiment configuration file (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{GeneratorConfig, EVEN_SPLIT};
use crate::error::{Error, Result};
use crate::opt::{LossConfig, OptimizerConfig};
use crate::stl::{Atom, AtomSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CqrConfig {
    /// Miscoverage level.
    pub alpha: f64,
    /// Neighbors per query; `⌈√n_train⌉` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

impl Default for CqrConfig {
    fn default() -> Self {
        Self { alpha: 0.1, k: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialsConfig {
    pub n_trials: usize,
    pub master_seed: u64,
    /// Fractions for train, cal1, test, cal2 and val.
    pub split: [f64; 5],
    /// An experiment aborts when more than this fraction of trials fail.
    pub max_failure_fraction: f64,
}

impl Default for TrialsConfig {
    fn default() -> Self {
        Self {
            n_trials: 50,
            master_seed: 0,
            split: EVEN_SPLIT,
            max_failure_fraction: 0.2,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub generator: GeneratorConfig,
    pub atoms: Vec<Atom>,
    pub cqr: CqrConfig,
    pub loss: LossConfig,
    pub optimizer: OptimizerConfig,
    pub trials: TrialsConfig,
    pub io: IoConfig,
}

/// Eventually-in-box atoms over the default scenario boxes, labelled
/// `box1` to `box5`.
pub fn default_atoms() -> Vec<Atom> {
    GeneratorConfig::default_boxes()
        .iter()
        .enumerate()
        .map(|(i, b)| Atom::eventually_in_box(format!("box{}", i + 1), *b))
        .collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            generator: GeneratorConfig::default(),
            atoms: default_atoms(),
            cqr: CqrConfig::default(),
            loss: LossConfig::default(),
            optimizer: OptimizerConfig::default(),
            trials: TrialsConfig::default(),
            io: IoConfig::default(),
        }
    }
}

fn section(name: &str, e: Error) -> Error {
    let msg = match e {
        Error::Config(m) | Error::InvalidInput(m) | Error::Capacity(m) => m,
        other => other.to_string(),
    };
    Error::Config(format!("[{name}] {msg}"))
}

impl ExperimentConfig {
    pub fn from_toml(src: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&src).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    pub fn atom_set(&self) -> Result<AtomSet> {
        AtomSet::new(self.atoms.clone()).map_err(|e| section("atoms", e))
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate().map_err(|e| section("generator", e))?;
        self.atom_set()?;
        let a = self.cqr.alpha;
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::Config(format!("[cqr] alpha must lie in (0, 1), got {a}")));
        }
        if self.cqr.k == Some(0) {
            return Err(Error::Config("[cqr] k must be positive".into()));
        }
        self.loss.validate().map_err(|e| section("loss", e))?;
        self.optimizer.validate().map_err(|e| section("optimizer", e))?;
        let t = &self.trials;
        if t.n_trials == 0 {
            return Err(Error::Config("[trials] n_trials must be positive".into()));
        }
        if !(0.0..=1.0).contains(&t.max_failure_fraction) {
            return Err(Error::Config(format!(
                "[trials] max_failure_fraction must lie in [0, 1], got {}",
                t.max_failure_fraction
            )));
        }
        let sum: f64 = t.split.iter().sum();
        if t.split.iter().any(|f| !(*f > 0.0)) || (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "[trials] split fractions must be positive and sum to 1, got {:?}",
                t.split
            )));
        }
        Ok(())
    }
}
