//! Cluster assignment and dendrogram exports.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::cluster::{ClusterPartition, Dendrogram};
use crate::trajectory::TrajectoryPool;

pub const ASSIGNMENTS_FILE: &str = "assignments.csv";
pub const DENDROGRAM_FILE: &str = "dendrogram.txt";

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("partition has {partition} leaves, dendrogram {dendrogram}, pool {pool}")]
    SizeMismatch {
        partition: usize,
        dendrogram: usize,
        pool: usize,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Assignment table `id,cluster,novelty_class`, one row per pool item in
/// pool order.
pub fn assignments_csv(pool: &TrajectoryPool, p: &ClusterPartition) -> String {
    let mut out = String::from("id,cluster,novelty_class\n");
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for (leaf, item) in pool.items().iter().enumerate() {
        let c = p.cluster_of(leaf);
        wtr.write_record([item.id(), &c.to_string(), p.class_of(c).as_str()])
            .expect("writing to memory");
    }
    out.push_str(std::str::from_utf8(&wtr.into_inner().expect("writing to memory")).expect("utf-8 input"));
    out
}

/// Writes `assignments.csv` and `dendrogram.txt` into `out_dir`, creating it
/// if needed.
pub fn export_clusters(
    pool: &TrajectoryPool,
    p: &ClusterPartition,
    t: &Dendrogram,
    out_dir: &Path,
) -> Result<(), ExportError> {
    if p.n_leaves() != t.n_leaves() || p.n_leaves() != pool.len() {
        return Err(ExportError::SizeMismatch {
            partition: p.n_leaves(),
            dendrogram: t.n_leaves(),
            pool: pool.len(),
        });
    }
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ExportError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let a = out_dir.join(ASSIGNMENTS_FILE);
    fs::write(&a, assignments_csv(pool, p)).map_err(io(&a))?;
    let d = out_dir.join(DENDROGRAM_FILE);
    fs::write(&d, t.to_table()).map_err(io(&d))?;
    Ok(())
}
