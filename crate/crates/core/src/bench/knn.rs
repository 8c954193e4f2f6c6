//! Training-free nearest-neighbour trajectory predictor and minADE scoring.

use super::BenchError;
use crate::metric::{path_distance, MetricWeights};
use crate::trajectory::{DynamicState, Point, TrajectoryState, POINTS_PER_TRAJECTORY};

/// Number of leading trajectory points the predictor observes.
pub const OBSERVED_POINTS: usize = 2;

pub type Path = [Point; POINTS_PER_TRAJECTORY];

/// What the predictor sees of an agent: its dynamic state and the first
/// [`OBSERVED_POINTS`] points of its path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Query {
    pub state: DynamicState,
    pub prefix: [Point; OBSERVED_POINTS],
}

impl Query {
    pub fn of(t: &TrajectoryState) -> Self {
        Self {
            state: t.state(),
            prefix: [t.points()[0], t.points()[1]],
        }
    }
}

/// Trajectory-state distance restricted to the observed prefix.
pub fn prefix_distance(q: &Query, t: &TrajectoryState, w: &MetricWeights) -> f64 {
    path_distance(&q.prefix, &t.points()[..OBSERVED_POINTS]) + w.state_distance(&q.state, &t.state())
}

/// Full paths of the `k_modes` labeled items nearest to the query prefix,
/// nearest first, ties broken by id.
pub fn knn_predict(
    query: &Query,
    labeled: &[&TrajectoryState],
    k_modes: usize,
    w: &MetricWeights,
) -> Result<Vec<Path>, BenchError> {
    if labeled.is_empty() {
        return Err(BenchError::EmptyTrainingPool);
    }
    if k_modes == 0 {
        return Err(BenchError::InvalidArgument("k_modes must be at least 1".into()));
    }
    let mut scored: Vec<(f64, &TrajectoryState)> = labeled
        .iter()
        .map(|t| (prefix_distance(query, t, w), *t))
        .collect();
    let cmp = |x: &(f64, &TrajectoryState), y: &(f64, &TrajectoryState)| {
        x.0.total_cmp(&y.0).then_with(|| x.1.id().cmp(y.1.id()))
    };
    let k = k_modes.min(scored.len());
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, cmp);
        scored.truncate(k);
    }
    scored.sort_by(cmp);
    Ok(scored.into_iter().map(|(_, t)| *t.points()).collect())
}

/// Mean point-wise Euclidean displacement between two paths.
pub fn average_displacement(a: &Path, b: &Path) -> f64 {
    path_distance(a, b) / POINTS_PER_TRAJECTORY as f64
}

/// Minimum average displacement error over the first `k` predictions.
pub fn min_ade_k(predictions: &[Path], truth: &Path, k: usize) -> Result<f64, BenchError> {
    if predictions.is_empty() || k == 0 {
        return Err(BenchError::NoPredictions);
    }
    Ok(predictions
        .iter()
        .take(k)
        .map(|p| average_displacement(p, truth))
        .fold(f64::INFINITY, f64::min))
}
