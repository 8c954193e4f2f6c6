//! Trajectory-state distance and condensed pairwise distance matrices.
//!
//! Coordinates are compared exactly as ingested. No re-centering or rotation
//! into an agent frame happens here, so callers that want frame-invariant
//! clusters must normalize upstream.

use std::io::{self, Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trajectory::{DynamicState, Point, TrajectoryState};

/// Per-term weights of the state part of the distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricWeights {
    /// Acceleration weight, 1/(m/s²).
    pub k_a: f64,
    /// Velocity weight, 1/(m/s).
    pub k_v: f64,
    /// Heading change rate weight, 1/(rad/s).
    pub k_h: f64,
}

impl Default for MetricWeights {
    fn default() -> Self {
        Self {
            k_a: 1.0 / 20.0,
            k_v: 1.0 / 40.0,
            k_h: 1.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("metric weight {name} must be finite and non-negative, got {value}")]
    InvalidWeight { name: &'static str, value: f64 },
    #[error("condensed matrix for n = {n} needs {expected} values, got {found}")]
    WrongLength { n: usize, expected: usize, found: usize },
    #[error("distance at position {0} is negative or non-finite")]
    InvalidDistance(usize),
    #[error("not a distance matrix dump: {0}")]
    BadDump(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl MetricWeights {
    pub fn new(k_a: f64, k_v: f64, k_h: f64) -> Result<Self, MetricError> {
        for (name, value) in [("k_a", k_a), ("k_v", k_v), ("k_h", k_h)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(MetricError::InvalidWeight { name, value });
            }
        }
        Ok(Self { k_a, k_v, k_h })
    }

    pub fn state_distance(&self, a: &DynamicState, b: &DynamicState) -> f64 {
        self.k_a * (a.a - b.a).abs() + self.k_v * (a.v - b.v).abs() + self.k_h * (a.h - b.h).abs()
    }
}

/// Sum of point-wise Euclidean displacements between two aligned paths.
#[inline]
pub fn path_distance(a: &[Point], b: &[Point]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p[0] - q[0]).hypot(p[1] - q[1]))
        .sum()
}

/// Weighted trajectory-state distance: summed point displacement over all
/// 12 points plus weighted absolute differences of a, v and h.
pub fn trajectory_state_distance(a: &TrajectoryState, b: &TrajectoryState, w: &MetricWeights) -> f64 {
    path_distance(a.points(), b.points()) + w.state_distance(&a.state(), &b.state())
}

/// Upper-triangle distance storage in row-major order:
/// (0,1), (0,2), …, (0,n−1), (1,2), …, (n−2,n−1).
#[derive(Debug, Clone, PartialEq)]
pub struct CondensedDistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

#[inline]
pub fn condensed_len(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Position of pair (i, j), i < j, in condensed order.
#[inline]
pub fn condensed_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    n * i - i * (i + 1) / 2 + (j - i - 1)
}

const DUMP_MAGIC: &[u8; 4] = b"TSDM";
const DUMP_VERSION: u32 = 1;

impl CondensedDistanceMatrix {
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self, MetricError> {
        let expected = condensed_len(n);
        if values.len() != expected {
            return Err(MetricError::WrongLength {
                n,
                expected,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(MetricError::InvalidDistance(pos));
        }
        Ok(Self { n, values })
    }

    /// Builds a matrix from a distance function over index pairs.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, MetricError> {
        let mut values = Vec::with_capacity(condensed_len(n));
        for i in 0..n {
            for j in i + 1..n {
                values.push(f(i, j));
            }
        }
        Self::from_values(n, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Distance between items i and j, 0 on the diagonal.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Less => self.values[condensed_index(self.n, i, j)],
            std::cmp::Ordering::Greater => self.values[condensed_index(self.n, j, i)],
        }
    }

    /// Writes the binary dump: `TSDM`, version u32, n u64, then the values,
    /// all little-endian.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<(), MetricError> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&DUMP_VERSION.to_le_bytes())?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(8 * 8192);
        for chunk in self.values.chunks(8192) {
            buf.clear();
            for v in chunk {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<Self, MetricError> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[..4] != DUMP_MAGIC {
            return Err(MetricError::BadDump("missing TSDM magic".into()));
        }
        let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
        if version != DUMP_VERSION {
            return Err(MetricError::BadDump(format!("unsupported version {version}")));
        }
        let n = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
        let len = condensed_len(n);
        let mut bytes = vec![0u8; len * 8];
        r.read_exact(&mut bytes)?;
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_values(n, values)
    }
}

/// Computes all pairwise distances of a pool.
///
/// Rows of the upper triangle are handed to worker threads as disjoint output
/// slices and every entry is computed on its own, so the result does not
/// depend on the thread count.
pub fn pairwise_distances(pool: &[TrajectoryState], w: &MetricWeights) -> CondensedDistanceMatrix {
    let n = pool.len();
    let mut values = vec![0.0f64; condensed_len(n)];

    let mut rows: Vec<(usize, &mut [f64])> = Vec::with_capacity(n);
    let mut rest = values.as_mut_slice();
    for i in 0..n.saturating_sub(1) {
        let (row, tail) = rest.split_at_mut(n - i - 1);
        rows.push((i, row));
        rest = tail;
    }

    rows.into_par_iter().for_each(|(i, row)| {
        let a = &pool[i];
        for (slot, b) in row.iter_mut().zip(&pool[i + 1..]) {
            *slot = trajectory_state_distance(a, b, w);
        }
    });

    CondensedDistanceMatrix { n, values }
}
