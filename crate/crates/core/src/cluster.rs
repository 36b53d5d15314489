//! Spectral clustering of the monthly combined similarity, cross-month
//! label alignment and the evaluation statistics built on top of it.

use alloc::string::String;

use crate::linalg::LinalgError;
use crate::{MonthKey, ProgramId};

mod align;
mod ari;
mod kmeans;
mod report;
mod spectral;

pub use align::{align_labels, hungarian_max, ClusterTimeline, RawAssignments};
pub use ari::{adjusted_rand_index, adjusted_rand_index_maps, ari_fraction};
pub use kmeans::{cluster, kmeans, KMeansConfig, KMeansResult, DEFAULT_SEED};
pub use report::{matrix_stddev, pca_assignments, sankey_flows, PcaProjection, SankeyFlow};
pub use spectral::{spectral_embed, spectral_embed_values, Embedding, NULL_EIGENVALUE_TOLERANCE};

/// Default number of clusters.
pub const DEFAULT_K: usize = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClusterError {
    #[error("k = {k} is invalid for {n} programs (need 2 <= k <= n)")]
    InvalidK { k: usize, n: usize },
    #[error("program {0} has zero total affinity")]
    IsolatedProgram(ProgramId),
    #[error("affinity matrix is not a valid symmetric non-negative matrix: {0}")]
    InvalidAffinity(String),
    #[error("eigensolver failed: {0}")]
    EigensolverFailure(LinalgError),
    #[error("month {month} uses cluster id {label}, outside 0..{k}")]
    KMismatch { month: MonthKey, label: usize, k: usize },
    #[error("no months to align")]
    EmptyTimeline,
    #[error("partitions cover different items")]
    ItemSetMismatch,
    #[error("at least two items are required")]
    TooFewItems,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("{0} programs; at least 3 are required")]
    TooFewPrograms(usize),
}
