//! Novelty-aware curation of trajectory data for annotation.
//!
//! The pipeline turns trajectory-states into a pairwise distance matrix
//! ([`metric`]), builds an average-linkage dendrogram and cuts it into flat
//! clusters ([`cluster`]), then picks items for labeling from novel and
//! familiar clusters ([`sampler`]). [`bench`] holds a synthetic pool and a
//! nearest-neighbour surrogate for measuring how selections help a
//! predictor; [`io`] and [`cli`] cover file formats and the command line.

pub mod bench;
pub mod cli;
pub mod cluster;
pub mod io;
pub mod metric;
pub mod rng;
pub mod sampler;
pub mod trajectory;
