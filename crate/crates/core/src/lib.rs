//! Learning signal temporal logic predicates whose robustness comes with a
//! conformal confidence interval.
//!
//! The crate is organized along the pipeline it implements:
//!
//! - [`stl`]: expression trees over a fixed atom library, quantitative
//!   robustness, truth tables, CNF simplification and the tree penalties.
//! - [`dataset`]: synthetic trajectory generation, partial observations,
//!   the five-way split and JSONL/CSV storage.
//! - [`cqr`]: kNN quantile regression and split conformalized quantile
//!   regression, including the per-atom predictor bank.
//! - [`interval`]: calibrated interval arithmetic over expression trees.
//! - [`opt`]: interval losses and four randomized expression optimizers.
//! - [`pipeline`]: a full trial (fit, mine, re-conformalize, evaluate) and
//!   multi-trial experiments.
//! - [`config`]: the experiment configuration file.

pub mod config;
pub mod cqr;
pub mod dataset;
pub mod error;
pub mod interval;
pub mod opt;
pub mod pipeline;
pub mod rng;
pub mod stl;

pub use config::ExperimentConfig;
pub use error::{Error, Result};

pub use interval::IntervalMatrix;
pub use opt::{Algorithm, Candidate, LossConfig, LossKind, OptimizerConfig};
pub use cqr::{AtomBank, ConformalAdjustment, KnnIndex, QuantilePredictor, RobustnessInterval};
pub use dataset::{Dataset, GeneratorConfig, Observation, SplitDataset};
pub use stl::{Atom, AtomKind, AtomSet, BoxRegion, Expr, Trajectory, TruthTable};
