//! Copula Discrepancy: a rank-based sample-quality diagnostic that compares
//! the dependence structure of sampler output with a target Archimedean
//! copula, together with comparison baselines, samplers and an experiment
//! harness.

pub mod baselines;
pub mod config;
pub mod copula;
pub mod data;
pub mod discrepancy;
pub mod error;
pub mod harness;
pub mod optimize;
pub mod ranks;
pub mod samplers;

pub use baselines::{KsdConfig, KsdEstimator};
pub use config::{ExperimentConfig, ExperimentId};
pub use copula::{CopulaFamily, CopulaModel, ParamBounds};
pub use data::BivariateSample;
pub use discrepancy::{ContaminationMode, DiagnosticReport, Estimator, TestResult};
pub use error::{Error, Result};
pub use harness::ResultRow;
pub use ranks::{ChainStats, PseudoObservations, VarianceEstimator};
pub use samplers::{Chain, MixtureTarget, Target};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator behind every seeded routine in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
