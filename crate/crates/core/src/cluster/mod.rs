//! Average-linkage hierarchical clustering, cophenetic queries and flat
//! cluster extraction with novelty classification.

mod dendrogram;
mod linkage;
mod partition;

use thiserror::Error;

pub use dendrogram::{Dendrogram, Merge};
pub use linkage::{upgma_linkage, upgma_linkage_owned};
pub use partition::{flat_clusters, refresh_partition, ClusterPartition, NoveltyClass};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusterError {
    #[error("unknown leaf {0}")]
    UnknownLeaf(usize),
    #[error("threshold must be non-negative, got {0}")]
    InvalidTau(f64),
    #[error("malformed dendrogram: {0}")]
    MalformedDendrogram(String),
}
