use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ClusterError;
use crate::io::fmt::g17;

/// One agglomeration step. Leaves are nodes `0..n`, merge `k` creates node
/// `n + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

/// Stepwise dendrogram produced by agglomerative clustering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    n_leaves: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    /// Builds a dendrogram, checking the structural invariants: n − 1
    /// merges, each node consumed at most once, consistent sizes, and
    /// non-decreasing heights.
    pub fn new(n_leaves: usize, merges: Vec<Merge>) -> Result<Self, ClusterError> {
        let bad = |msg: String| Err(ClusterError::MalformedDendrogram(msg));
        if merges.len() != n_leaves.saturating_sub(1) {
            return bad(format!(
                "{} leaves need {} merges, got {}",
                n_leaves,
                n_leaves.saturating_sub(1),
                merges.len()
            ));
        }
        let total = n_leaves + merges.len();
        let mut consumed = vec![false; total];
        let mut sizes = vec![1usize; total];
        let mut last = 0.0f64;
        for (k, m) in merges.iter().enumerate() {
            let node = n_leaves + k;
            for child in [m.left, m.right] {
                if child >= node {
                    return bad(format!("merge {k} references node {child} before it exists"));
                }
                if consumed[child] {
                    return bad(format!("node {child} merged twice"));
                }
                consumed[child] = true;
            }
            if m.left == m.right {
                return bad(format!("merge {k} joins node {} with itself", m.left));
            }
            if sizes[m.left] + sizes[m.right] != m.size {
                return bad(format!("merge {k} has size {} but children sum to {}", m.size, sizes[m.left] + sizes[m.right]));
            }
            if !(m.height.is_finite() && m.height >= 0.0) {
                return bad(format!("merge {k} has invalid height {}", m.height));
            }
            if m.height < last {
                return bad(format!("merge {k} height {} below previous {last}", m.height));
            }
            last = m.height;
            sizes[node] = m.size;
        }
        Ok(Self { n_leaves, merges })
    }

    pub(crate) fn from_parts_unchecked(n_leaves: usize, merges: Vec<Merge>) -> Self {
        Self { n_leaves, merges }
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// Parent node of every node; the root maps to `None`.
    pub fn parents(&self) -> Vec<Option<usize>> {
        let mut parent = vec![None; self.n_leaves + self.merges.len()];
        for (k, m) in self.merges.iter().enumerate() {
            parent[m.left] = Some(self.n_leaves + k);
            parent[m.right] = Some(self.n_leaves + k);
        }
        parent
    }

    /// Height of the lowest merge containing both leaves.
    pub fn cophenetic_distance(&self, i: usize, j: usize) -> Result<f64, ClusterError> {
        for leaf in [i, j] {
            if leaf >= self.n_leaves {
                return Err(ClusterError::UnknownLeaf(leaf));
            }
        }
        if i == j {
            return Ok(0.0);
        }
        let parent = self.parents();
        let mut on_path = vec![false; parent.len()];
        let mut node = Some(i);
        while let Some(x) = node {
            on_path[x] = true;
            node = parent[x];
        }
        let mut node = parent[j];
        while let Some(x) = node {
            if on_path[x] {
                return Ok(self.merges[x - self.n_leaves].height);
            }
            node = parent[x];
        }
        unreachable!("a complete dendrogram has a single root")
    }

    /// Text table, one merge per line: `left right height size`.
    pub fn to_table(&self) -> String {
        let mut out = String::with_capacity(self.merges.len() * 40);
        for m in &self.merges {
            let _ = writeln!(out, "{} {} {} {}", m.left, m.right, g17(m.height), m.size);
        }
        out
    }

    pub fn from_table(n_leaves: usize, text: &str) -> Result<Self, ClusterError> {
        let mut merges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = || ClusterError::MalformedDendrogram(format!("line {}: {line:?}", lineno + 1));
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(bad());
            }
            merges.push(Merge {
                left: f[0].parse().map_err(|_| bad())?,
                right: f[1].parse().map_err(|_| bad())?,
                height: f[2].parse().map_err(|_| bad())?,
                size: f[3].parse().map_err(|_| bad())?,
            });
        }
        Self::new(n_leaves, merges)
    }
}
