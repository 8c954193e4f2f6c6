//! Trajectory-state records and kinematic state estimation.
//!
//! A trajectory-state is a fixed-length future path of ground-plane points
//! (12 points, 2 Hz over 6 s) together with the agent's dynamic state at the
//! start of the prediction window: velocity, acceleration and heading change
//! rate.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of future points per trajectory.
pub const POINTS_PER_TRAJECTORY: usize = 12;

/// Sampling interval of the future points, in seconds.
pub const SAMPLE_INTERVAL_S: f64 = 0.5;

/// Displacements shorter than this (meters) carry no heading information.
pub const STANDSTILL_EPS: f64 = 1e-6;

/// A ground-plane coordinate in meters.
pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("trajectory {id:?} has {found} points, expected {POINTS_PER_TRAJECTORY}")]
    WrongPointCount { id: String, found: usize },
    #[error("trajectory {id:?} has a non-finite value in {field}")]
    NonFiniteValue { id: String, field: String },
    #[error("trajectory id is empty")]
    EmptyId,
    #[error("dynamics estimation needs at least 3 points, got {found}")]
    TooFewPoints { found: usize },
    #[error("sample interval must be positive and finite, got {0}")]
    ZeroDt(f64),
    #[error("duplicate trajectory id {0:?}")]
    DuplicateId(String),
    #[error("labeled id {0:?} is not in the pool")]
    UnknownLabeledId(String),
}

/// Candidate record before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTrajectory {
    pub id: String,
    pub points: Vec<Point>,
    pub v: f64,
    pub a: f64,
    pub h: f64,
}

/// Dynamic state of an agent at the start of the prediction window.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DynamicState {
    /// Speed, m/s.
    pub v: f64,
    /// Longitudinal acceleration, m/s².
    pub a: f64,
    /// Heading change rate, rad/s.
    pub h: f64,
}

/// A validated trajectory-state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryState {
    id: String,
    points: [Point; POINTS_PER_TRAJECTORY],
    state: DynamicState,
}

impl TrajectoryState {
    pub fn new(
        id: impl Into<String>,
        points: [Point; POINTS_PER_TRAJECTORY],
        state: DynamicState,
    ) -> Result<Self, TrajectoryError> {
        let id = id.into();
        check_finite(&id, &points, &state)?;
        if id.is_empty() {
            return Err(TrajectoryError::EmptyId);
        }
        Ok(Self { id, points, state })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn points(&self) -> &[Point; POINTS_PER_TRAJECTORY] {
        &self.points
    }

    pub fn state(&self) -> DynamicState {
        self.state
    }

    pub fn to_raw(&self) -> RawTrajectory {
        RawTrajectory {
            id: self.id.clone(),
            points: self.points.to_vec(),
            v: self.state.v,
            a: self.state.a,
            h: self.state.h,
        }
    }
}

fn check_finite(id: &str, points: &[Point], state: &DynamicState) -> Result<(), TrajectoryError> {
    let non_finite = |field: String| TrajectoryError::NonFiniteValue {
        id: id.to_string(),
        field,
    };
    for (k, p) in points.iter().enumerate() {
        if !p[0].is_finite() {
            return Err(non_finite(format!("x{}", k + 1)));
        }
        if !p[1].is_finite() {
            return Err(non_finite(format!("y{}", k + 1)));
        }
    }
    for (name, value) in [("v", state.v), ("a", state.a), ("h", state.h)] {
        if !value.is_finite() {
            return Err(non_finite(name.to_string()));
        }
    }
    Ok(())
}

/// Validates a raw record into a [`TrajectoryState`].
pub fn validate_trajectory_state(raw: &RawTrajectory) -> Result<TrajectoryState, TrajectoryError> {
    if raw.id.is_empty() {
        return Err(TrajectoryError::EmptyId);
    }
    let points: [Point; POINTS_PER_TRAJECTORY] =
        raw.points
            .as_slice()
            .try_into()
            .map_err(|_| TrajectoryError::WrongPointCount {
                id: raw.id.clone(),
                found: raw.points.len(),
            })?;
    TrajectoryState::new(
        raw.id.clone(),
        points,
        DynamicState {
            v: raw.v,
            a: raw.a,
            h: raw.h,
        },
    )
}

fn wrap_angle(theta: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut t = theta.rem_euclid(two_pi);
    if t > std::f64::consts::PI {
        t -= two_pi;
    }
    t
}

/// Estimates (v, a, h) at the last observation of a position track using
/// finite differences over the final three points.
///
/// Heading is the direction of each displacement. A displacement shorter than
/// [`STANDSTILL_EPS`] inherits the previous heading, so standstill contributes
/// no heading change.
pub fn estimate_dynamics(points: &[Point], dt: f64) -> Result<DynamicState, TrajectoryError> {
    if points.len() < 3 {
        return Err(TrajectoryError::TooFewPoints {
            found: points.len(),
        });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(TrajectoryError::ZeroDt(dt));
    }

    // Carry headings forward through the whole track so that a standstill at
    // the end still reports the last known heading.
    let mut heading: Option<f64> = None;
    let mut headings = Vec::with_capacity(points.len() - 1);
    let mut speeds = Vec::with_capacity(points.len() - 1);
    for w in points.windows(2) {
        let dx = w[1][0] - w[0][0];
        let dy = w[1][1] - w[0][1];
        let dist = dx.hypot(dy);
        if dist >= STANDSTILL_EPS {
            heading = Some(dy.atan2(dx));
        }
        headings.push(heading);
        speeds.push(dist / dt);
    }

    let m = speeds.len();
    let v = speeds[m - 1];
    let a = (speeds[m - 1] - speeds[m - 2]) / dt;
    let h = match (headings[m - 2], headings[m - 1]) {
        (Some(prev), Some(last)) => wrap_angle(last - prev) / dt,
        _ => 0.0,
    };
    Ok(DynamicState { v, a, h })
}

/// A set of trajectory-states with the subset currently in the training pool.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPool {
    items: Vec<TrajectoryState>,
    labeled: BTreeSet<usize>,
}

impl TrajectoryPool {
    pub fn new(items: Vec<TrajectoryState>) -> Result<Self, TrajectoryError> {
        let mut seen = HashSet::with_capacity(items.len());
        for item in &items {
            if !seen.insert(item.id()) {
                return Err(TrajectoryError::DuplicateId(item.id().to_string()));
            }
        }
        Ok(Self {
            items,
            labeled: BTreeSet::new(),
        })
    }

    /// Builds a pool and marks the given ids as labeled.
    pub fn with_labeled<I, S>(items: Vec<TrajectoryState>, labeled: I) -> Result<Self, TrajectoryError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut pool = Self::new(items)?;
        let mut set = BTreeSet::new();
        let index = pool.id_index();
        for id in labeled {
            let id = id.as_ref();
            let i = index
                .get(id)
                .copied()
                .ok_or_else(|| TrajectoryError::UnknownLabeledId(id.to_string()))?;
            set.insert(i);
        }
        pool.labeled = set;
        Ok(pool)
    }

    /// Builds a pool with labeled items given by index.
    pub fn with_labeled_indices(
        items: Vec<TrajectoryState>,
        labeled: BTreeSet<usize>,
    ) -> Result<Self, TrajectoryError> {
        let mut pool = Self::new(items)?;
        if let Some(&bad) = labeled.iter().find(|&&i| i >= pool.items.len()) {
            return Err(TrajectoryError::UnknownLabeledId(format!("#{bad}")));
        }
        pool.labeled = labeled;
        Ok(pool)
    }

    pub fn items(&self) -> &[TrajectoryState] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Indices of labeled items (the training pool).
    pub fn labeled(&self) -> &BTreeSet<usize> {
        &self.labeled
    }

    pub fn is_labeled(&self, index: usize) -> bool {
        self.labeled.contains(&index)
    }

    /// Indices of unlabeled items, ascending.
    pub fn unlabeled(&self) -> Vec<usize> {
        (0..self.items.len())
            .filter(|i| !self.labeled.contains(i))
            .collect()
    }

    pub fn labeled_ids(&self) -> impl Iterator<Item = &str> {
        self.labeled.iter().map(|&i| self.items[i].id())
    }

    pub fn id_index(&self) -> std::collections::HashMap<&str, usize> {
        self.items
            .iter()
            .enumerate()
            .map(|(i, t)| (t.id(), i))
            .collect()
    }
}
