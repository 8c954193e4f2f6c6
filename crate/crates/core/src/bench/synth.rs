//! Synthetic trajectory-state pools built from kinematic motifs.
//!
//! Each item starts at the origin heading along +x with initial state
//! (v, a, h) drawn uniformly from its motif's ranges. Motion is integrated in
//! 0.5 s steps: step `k` moves `speed_k · dt` along `heading_k`, so the
//! finite-difference estimate over three noise-free points recovers the
//! speed, acceleration and turn rate of the last step exactly.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::rng::stream;
use crate::trajectory::{DynamicState, Point, TrajectoryState, POINTS_PER_TRAJECTORY, SAMPLE_INTERVAL_S};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MotifKind {
    Straight,
    LeftTurn,
    RightTurn,
    Stop,
    StopThenTurn,
    UTurn,
}

/// Closed interval `[lo, hi]`.
pub type Range = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Motif {
    pub kind: MotifKind,
    /// Share of the pool.
    pub weight: f64,
    /// Standard deviation of the per-coordinate point noise, meters.
    pub noise_sigma: f64,
    /// Initial speed, m/s.
    pub v: Range,
    /// Acceleration, m/s². Stop kinds use it as (negative) braking.
    pub a: Range,
    /// Turn rate, rad/s. For `stop-then-turn` this is the rate after the
    /// stop; the recorded initial rate is 0.
    pub h: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPoolSpec {
    pub motifs: Vec<Motif>,
    pub total_count: usize,
    pub seed: u64,
}

/// Generated items with the motif index of each.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPool {
    pub items: Vec<TrajectoryState>,
    pub motif: Vec<usize>,
}

const CANONICAL_SPEC: &str = include_str!("../../fixtures/canonical_pool.json");

/// The shipped benchmark fixture: 2,000 items, 8 dense motifs holding 90%
/// of the mass and 40 rare motifs holding 10%.
pub fn canonical_spec() -> SyntheticPoolSpec {
    serde_json::from_str(CANONICAL_SPEC).expect("canonical fixture parses")
}

impl SyntheticPoolSpec {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::InvalidSpec(m));
        if self.motifs.is_empty() {
            return bad("no motifs".into());
        }
        let mut total = 0.0;
        for (i, m) in self.motifs.iter().enumerate() {
            if !(m.weight.is_finite() && m.weight >= 0.0) {
                return bad(format!("motif {i}: weight {} is not a proportion", m.weight));
            }
            if !(m.noise_sigma.is_finite() && m.noise_sigma >= 0.0) {
                return bad(format!("motif {i}: noise_sigma {} is invalid", m.noise_sigma));
            }
            for (name, r) in [("v", m.v), ("a", m.a), ("h", m.h)] {
                if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
                    return bad(format!("motif {i}: {name} range {r:?} is invalid"));
                }
            }
            if m.v[0] < 0.0 {
                return bad(format!("motif {i}: negative speed"));
            }
            total += m.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("motif weights sum to {total}, expected 1"));
        }
        Ok(())
    }

    /// Items per motif by largest-remainder rounding; remainder ties go to
    /// the lower motif index.
    pub fn motif_counts(&self) -> Vec<usize> {
        let n = self.total_count as f64;
        let exact: Vec<f64> = self.motifs.iter().map(|m| m.weight * n).collect();
        let mut counts: Vec<usize> = exact.iter().map(|e| (e + 1e-9).floor() as usize).collect();
        let assigned: usize = counts.iter().sum();
        let mut order: Vec<usize> = (0..exact.len()).collect();
        order.sort_by(|&i, &j| {
            let fi = exact[i] - counts[i] as f64;
            let fj = exact[j] - counts[j] as f64;
            fj.total_cmp(&fi).then(i.cmp(&j))
        });
        for &i in order.iter().take(self.total_count.saturating_sub(assigned)) {
            counts[i] += 1;
        }
        counts
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, r: Range) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..=r[1])
    }
}

/// Speed and heading of each of the 12 future steps.
fn profile(kind: MotifKind, v0: f64, a: f64, h: f64) -> [(f64, f64); POINTS_PER_TRAJECTORY] {
    let dt = SAMPLE_INTERVAL_S;
    let mut out = [(0.0, 0.0); POINTS_PER_TRAJECTORY];
    match kind {
        MotifKind::Straight
        | MotifKind::LeftTurn
        | MotifKind::RightTurn
        | MotifKind::Stop
        | MotifKind::UTurn => {
            for (k, slot) in out.iter_mut().enumerate() {
                let t = (k + 1) as f64 * dt;
                *slot = ((v0 + a * t).max(0.0), h * t);
            }
        }
        MotifKind::StopThenTurn => {
            // brake to a halt, wait one step, then pull away at |a| turning
            // at rate h
            let mut speed = v0;
            let mut heading = 0.0;
            let mut stopped_for = 0;
            for slot in out.iter_mut() {
                if speed > 0.0 && stopped_for == 0 {
                    speed = (speed + a * dt).max(0.0);
                    if speed == 0.0 {
                        stopped_for = 1;
                    }
                } else if stopped_for == 1 {
                    stopped_for = 2;
                } else {
                    speed += a.abs() * dt;
                    heading += h * dt;
                }
                *slot = (speed, heading);
            }
        }
    }
    out
}

fn integrate(steps: &[(f64, f64); POINTS_PER_TRAJECTORY]) -> [Point; POINTS_PER_TRAJECTORY] {
    let dt = SAMPLE_INTERVAL_S;
    let mut p = [0.0, 0.0];
    let mut out = [[0.0; 2]; POINTS_PER_TRAJECTORY];
    for (slot, &(speed, heading)) in out.iter_mut().zip(steps) {
        p = [p[0] + speed * dt * heading.cos(), p[1] + speed * dt * heading.sin()];
        *slot = p;
    }
    out
}

/// Generates a pool with motif tags.
pub fn generate_tagged_pool(spec: &SyntheticPoolSpec) -> Result<SyntheticPool, BenchError> {
    spec.validate()?;
    let counts = spec.motif_counts();
    let mut rng = stream(spec.seed, 0);
    let mut items = Vec::with_capacity(spec.total_count);
    let mut motif = Vec::with_capacity(spec.total_count);
    for (m, (def, &count)) in spec.motifs.iter().zip(&counts).enumerate() {
        let noise = Normal::new(0.0, def.noise_sigma).expect("validated sigma");
        for _ in 0..count {
            let v = uniform(&mut rng, def.v);
            let a = uniform(&mut rng, def.a);
            let h = uniform(&mut rng, def.h);
            let mut points = integrate(&profile(def.kind, v, a, h));
            if def.noise_sigma > 0.0 {
                for p in points.iter_mut() {
                    p[0] += noise.sample(&mut rng);
                    p[1] += noise.sample(&mut rng);
                }
            }
            let initial_h = if def.kind == MotifKind::StopThenTurn { 0.0 } else { h };
            let id = format!("syn-{:06}", items.len());
            let state = DynamicState { v, a, h: initial_h };
            items.push(TrajectoryState::new(id, points, state).map_err(|e| BenchError::InvalidSpec(e.to_string()))?);
            motif.push(m);
        }
    }
    Ok(SyntheticPool { items, motif })
}

pub fn generate_synthetic_pool(spec: &SyntheticPoolSpec) -> Result<Vec<TrajectoryState>, BenchError> {
    Ok(generate_tagged_pool(spec)?.items)
}
