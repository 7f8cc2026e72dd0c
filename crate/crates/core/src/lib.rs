//! Population Monte Carlo with deterministic-mixture weights, multiple
//! samples per proposal and global or local resampling, plus SMC baselines
//! and the benchmark targets used to compare them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod estimators;
pub mod gaussian;
pub mod resampling;
pub mod rng;
pub mod sample;
pub mod smc;
pub mod target;
pub mod targets;
pub mod weighting;

pub use engine::{run_pmc, InitBox, Placement, PmcConfig, PmcScheme, RunFlags, RunRecord};
pub use error::{PmcError, Result};
pub use estimators::{EstimatorAccumulator, EstimatorSnapshot};
pub use gaussian::{draw_gaussian, gaussian_log_density, GaussianProposal, ProposalPopulation};
pub use resampling::{AncestorRecord, ResampleKernel};
pub use rng::RngStream;
pub use sample::WeightedSample;
pub use smc::{run_smc, SmcConfig, TemperingLadder};
pub use target::{CountingTarget, FnTarget, Target};
pub use weighting::WeightScheme;
