//! Desk-scale experiment harness: synthetic pools, a nearest-neighbour
//! surrogate predictor and the α/β/budget sweep.

pub mod experiment;
pub mod knn;
pub mod synth;

use thiserror::Error;

pub use experiment::{
    run_al_experiment, stratified_split, CellMean, ExperimentOptions, ExperimentResult, ExperimentRow, Strategy,
};
pub use knn::{knn_predict, min_ade_k, prefix_distance, Path, Query};
pub use synth::{
    canonical_spec, generate_synthetic_pool, generate_tagged_pool, Motif, MotifKind, SyntheticPool,
    SyntheticPoolSpec,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("invalid synthetic pool spec: {0}")]
    InvalidSpec(String),
    #[error("the labeled training pool is empty")]
    EmptyTrainingPool,
    #[error("no predictions to score")]
    NoPredictions,
    #[error("pool too small: {0}")]
    InsufficientPool(String),
    #[error("{0}")]
    InvalidArgument(String),
}
