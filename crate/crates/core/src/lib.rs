//! Bounded fuzzy possibilistic clustering and its evaluation toolkit.
//!
//! The crate is organised bottom-up:
//!
//! * [`dataset`] loads and normalises numeric tables and produces
//!   train/test splits (holdout, random subsampling, k-fold, bootstrap).
//! * [`distance`] implements Minkowski, weighted-feature (WFD) and
//!   prioritised weighted-feature (PWFD) distances plus dominant-feature
//!   detection.
//! * [`membership`] holds the partition matrix, the four membership regimes
//!   (crisp, fuzzy, possibilistic, bounded fuzzy possibilistic), the BFPM
//!   membership and centroid updates, and hardening.
//! * [`clustering`] drives the FPM, FPM-I, FPM-II, BFPM and BFPM-WFD loops.
//! * [`classify`] is the BFPCM nearest-prototype classifier together with
//!   confusion-matrix metrics and error measures.
//! * [`analysis`] contains validity indices, label-mapped accuracy,
//!   critical-object detection and mutation reports.
//!
//! All randomness is driven by an explicit `u64` seed through
//! [`seeded_rng`], so every operation is reproducible bit for bit.

pub mod analysis;
pub mod classify;
pub mod clustering;
pub mod dataset;
pub mod distance;
pub mod membership;

use rand::SeedableRng;

pub use analysis::{AnalysisError, CriticalFlag, MutationReport};
pub use classify::{ClassifierModel, ClassifyError, ConfusionMatrix};
pub use clustering::{Algorithm, ClusterConfig, ClusterError, ClusterResult};
pub use dataset::{Dataset, DatasetError, Split, SplitKind, SplitPlan};
pub use distance::{DistanceError, DistanceSpec, DominantReport, Family, Weights};
pub use membership::{Centroids, ExponentForm, MembershipError, PartitionMatrix, Regime};

/// The generator behind every seeded operation: ChaCha with 8 rounds.
///
/// Its output stream is fixed by the `rand_chacha` crate for a given seed,
/// independent of platform and word size.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Builds the crate's deterministic generator from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}

/// Union of the per-module errors, for callers that drive a whole pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Distance(#[from] DistanceError),
    #[error(transparent)]
    Membership(#[from] MembershipError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
