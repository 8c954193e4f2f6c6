//! One novelty-sensitive active learning round.
//!
//! A round clusters the whole pool (labeled and unlabeled), then fills the
//! annotation budget in three phases:
//!
//! 1. **novel**: `round(α·B)` picks drawn from clusters without any labeled
//!    member and from unlabeled singletons. Candidates are picked uniformly
//!    and each is visited at most once; a cluster contributes at most its
//!    depth cap `max(1, ⌊β·|cluster|⌋)`.
//! 2. **familiar**: the novel picks count as labeled, then the remaining
//!    `B − round(α·B)` picks come from clusters holding a labeled member.
//!    Clusters are visited in passes (uniform order per pass) with a fresh
//!    depth cap each pass, until the quota is met or supply runs out.
//! 3. **fallback**: any shortfall is drawn uniformly from whatever is still
//!    unlabeled.
//!
//! Each phase draws from its own random stream (see [`crate::rng`]), so a
//! manifest is a pure function of the pool, the config and the round index.

use std::collections::BTreeSet;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{flat_clusters, upgma_linkage_owned, ClusterError, ClusterPartition, Dendrogram, NoveltyClass};
use crate::metric::{pairwise_distances, MetricWeights};
use crate::rng::{phase_stream, Phase};
use crate::trajectory::TrajectoryPool;

/// Default flat-cluster threshold, meters of summed displacement.
pub const DEFAULT_TAU: f64 = 10.0;

// Absorbs products like 0.29 · 100 = 28.999999999999996 before flooring.
const ROUNDING_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("invalid sampling config: {0}")]
    InvalidConfig(String),
    #[error("no unlabeled items left to sample")]
    EmptyUnlabeledPool,
    #[error("dendrogram has {found} leaves but the pool has {expected} items")]
    DendrogramMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

/// Annotation budget: an absolute count, or a fraction of the pool size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Count(usize),
    Fraction(f64),
}

impl Budget {
    /// Resolves to a count against a pool of `pool_len` items.
    pub fn resolve(self, pool_len: usize) -> usize {
        match self {
            Budget::Count(b) => b,
            Budget::Fraction(f) => ((f * pool_len as f64 + 0.5 + ROUNDING_SLACK).floor() as usize).max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// Fraction of the budget drawn from novel data.
    pub alpha: f64,
    /// Fraction of a cluster one pass may take.
    pub beta: f64,
    pub budget: Budget,
    pub tau: f64,
    pub weights: MetricWeights,
    pub seed: u64,
}

impl SamplingConfig {
    /// Config with the default threshold, default weights and seed 0.
    pub fn new(alpha: f64, beta: f64, budget: Budget) -> Result<Self, SamplerError> {
        let cfg = Self {
            alpha,
            beta,
            budget,
            tau: DEFAULT_TAU,
            weights: MetricWeights::default(),
            seed: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        let bad = |msg: String| Err(SamplerError::InvalidConfig(msg));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return bad(format!("beta must lie in (0, 1], got {}", self.beta));
        }
        match self.budget {
            Budget::Count(0) => return bad("budget must be at least 1".into()),
            Budget::Fraction(f) if !(f > 0.0 && f <= 1.0) => {
                return bad(format!("budget fraction must lie in (0, 1], got {f}"))
            }
            _ => {}
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be finite and non-negative, got {}", self.tau));
        }
        if MetricWeights::new(self.weights.k_a, self.weights.k_v, self.weights.k_h).is_err() {
            return bad("metric weights must be finite and non-negative".into());
        }
        Ok(())
    }

    /// Novel quota `round(α·B)` (half up), familiar quota `B − novel`.
    pub fn quotas(&self, budget: usize) -> (usize, usize) {
        let novel = ((self.alpha * budget as f64 + 0.5 + ROUNDING_SLACK).floor() as usize).min(budget);
        (novel, budget - novel)
    }
}

/// Most members one pass may take from a cluster of `cluster_size`.
pub fn depth_cap(beta: f64, cluster_size: usize) -> usize {
    ((beta * cluster_size as f64 + ROUNDING_SLACK).floor() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseTag {
    NovelCluster,
    NovelSingleton,
    Familiar,
    Fallback,
}

impl PhaseTag {
    pub fn is_novel(self) -> bool {
        matches!(self, PhaseTag::NovelCluster | PhaseTag::NovelSingleton)
    }
}

/// A leaf chosen by one of the phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pick {
    pub leaf: usize,
    pub cluster: usize,
    pub phase: PhaseTag,
    /// Familiar pass number starting at 1; 0 for other phases.
    pub pass: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseDraw {
    pub picks: Vec<Pick>,
    pub shortfall: usize,
}

fn draw_members<R: Rng + ?Sized>(rng: &mut R, pool: &[usize], take: usize) -> Vec<usize> {
    index::sample(rng, pool.len(), take)
        .into_iter()
        .map(|i| pool[i])
        .collect()
}

/// Novel phase: picks from novel clusters and unlabeled singletons.
pub fn sample_novel<R: Rng + ?Sized>(
    p: &ClusterPartition,
    quota: usize,
    beta: f64,
    rng: &mut R,
) -> PhaseDraw {
    let mut candidates: Vec<usize> = (0..p.n_clusters())
        .filter(|&c| matches!(p.class_of(c), NoveltyClass::Novel | NoveltyClass::Singleton))
        .collect();
    let mut picks = Vec::new();
    while picks.len() < quota && !candidates.is_empty() {
        let c = candidates.swap_remove(rng.random_range(0..candidates.len()));
        let members = p.members(c);
        if p.class_of(c) == NoveltyClass::Singleton {
            picks.push(Pick {
                leaf: members[0],
                cluster: c,
                phase: PhaseTag::NovelSingleton,
                pass: 0,
            });
            continue;
        }
        let take = depth_cap(beta, members.len())
            .min(quota - picks.len())
            .min(members.len());
        for leaf in draw_members(rng, members, take) {
            picks.push(Pick {
                leaf,
                cluster: c,
                phase: PhaseTag::NovelCluster,
                pass: 0,
            });
        }
    }
    PhaseDraw {
        shortfall: quota - picks.len(),
        picks,
    }
}

/// Familiar phase: picks unlabeled members of clusters that hold a labeled
/// member, in capped passes.
pub fn sample_familiar<R: Rng + ?Sized>(
    p: &ClusterPartition,
    quota: usize,
    beta: f64,
    rng: &mut R,
) -> PhaseDraw {
    let familiar: Vec<usize> = p.familiar_clusters().into_iter().collect();
    let mut remaining: Vec<Vec<usize>> = familiar
        .iter()
        .map(|&c| p.unlabeled_members(c).collect())
        .collect();
    let mut picks = Vec::new();
    let mut pass = 0;
    while picks.len() < quota {
        let mut eligible: Vec<usize> = (0..familiar.len())
            .filter(|&k| !remaining[k].is_empty())
            .collect();
        if eligible.is_empty() {
            break;
        }
        pass += 1;
        eligible.shuffle(rng);
        for k in eligible {
            if picks.len() == quota {
                break;
            }
            let c = familiar[k];
            let take = depth_cap(beta, p.members(c).len())
                .min(quota - picks.len())
                .min(remaining[k].len());
            let chosen: BTreeSet<usize> = index::sample(rng, remaining[k].len(), take).into_iter().collect();
            let mut kept = Vec::with_capacity(remaining[k].len() - take);
            for (i, &leaf) in remaining[k].iter().enumerate() {
                if !chosen.contains(&i) {
                    kept.push(leaf);
                }
            }
            for &i in &chosen {
                picks.push(Pick {
                    leaf: remaining[k][i],
                    cluster: c,
                    phase: PhaseTag::Familiar,
                    pass,
                });
            }
            remaining[k] = kept;
        }
    }
    PhaseDraw {
        shortfall: quota - picks.len(),
        picks,
    }
}

/// One selected item in a manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub id: String,
    pub phase: PhaseTag,
    pub cluster: usize,
    pub pass: usize,
}

/// Auditable record of a sampling round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionManifest {
    pub round_index: u32,
    pub config: SamplingConfig,
    /// Budget resolved to a count.
    pub budget: usize,
    pub pool_size: usize,
    pub unlabeled_at_start: usize,
    pub n_clusters: usize,
    pub novel_quota: usize,
    pub familiar_quota: usize,
    pub novel_shortfall: usize,
    pub familiar_shortfall: usize,
    pub fallback_count: usize,
    pub selected: Vec<Selection>,
}

impl SelectionManifest {
    pub fn count(&self, pred: impl Fn(PhaseTag) -> bool) -> usize {
        self.selected.iter().filter(|s| pred(s.phase)).count()
    }

    pub fn selected_ids(&self) -> impl Iterator<Item = &str> {
        self.selected.iter().map(|s| s.id.as_str())
    }
}

/// Clusters a pool with the given weights.
pub fn cluster_pool(pool: &TrajectoryPool, weights: &MetricWeights) -> Dendrogram {
    upgma_linkage_owned(pairwise_distances(pool.items(), weights))
}

/// Runs one round, clustering the pool from scratch.
pub fn sampling_round(
    pool: &TrajectoryPool,
    cfg: &SamplingConfig,
    round_index: u32,
) -> Result<SelectionManifest, SamplerError> {
    cfg.validate()?;
    if pool.unlabeled().is_empty() {
        return Err(SamplerError::EmptyUnlabeledPool);
    }
    let dendrogram = cluster_pool(pool, &cfg.weights);
    sampling_round_with(pool, &dendrogram, cfg, round_index)
}

/// Runs one round on a dendrogram already built over the pool with
/// `cfg.weights`. Clustering covers labeled and unlabeled items alike, so the
/// dendrogram can be reused across rounds and configs sharing the weights.
pub fn sampling_round_with(
    pool: &TrajectoryPool,
    dendrogram: &Dendrogram,
    cfg: &SamplingConfig,
    round_index: u32,
) -> Result<SelectionManifest, SamplerError> {
    cfg.validate()?;
    if dendrogram.n_leaves() != pool.len() {
        return Err(SamplerError::DendrogramMismatch {
            expected: pool.len(),
            found: dendrogram.n_leaves(),
        });
    }
    let unlabeled = pool.unlabeled();
    if unlabeled.is_empty() {
        return Err(SamplerError::EmptyUnlabeledPool);
    }

    let budget = cfg.budget.resolve(pool.len());
    let target = budget.min(unlabeled.len());
    let (novel_quota, familiar_quota) = cfg.quotas(budget);

    let partition = flat_clusters(dendrogram, cfg.tau, pool.labeled())?;

    let mut rng = phase_stream(cfg.seed, round_index, Phase::Novel);
    let novel = sample_novel(&partition, novel_quota, cfg.beta, &mut rng);
    let novel_leaves: BTreeSet<usize> = novel.picks.iter().map(|p| p.leaf).collect();
    let partition = partition.refresh(&novel_leaves)?;

    let mut rng = phase_stream(cfg.seed, round_index, Phase::Familiar);
    let familiar = sample_familiar(&partition, familiar_quota, cfg.beta, &mut rng);

    let mut picks = novel.picks;
    picks.extend(familiar.picks);

    let taken: BTreeSet<usize> = picks.iter().map(|p| p.leaf).collect();
    let rest: Vec<usize> = unlabeled.iter().copied().filter(|i| !taken.contains(i)).collect();
    let need = target.saturating_sub(picks.len());
    let mut rng = phase_stream(cfg.seed, round_index, Phase::Fallback);
    for leaf in draw_members(&mut rng, &rest, need) {
        picks.push(Pick {
            leaf,
            cluster: partition.cluster_of(leaf),
            phase: PhaseTag::Fallback,
            pass: 0,
        });
    }

    let items = pool.items();
    Ok(SelectionManifest {
        round_index,
        config: *cfg,
        budget,
        pool_size: pool.len(),
        unlabeled_at_start: unlabeled.len(),
        n_clusters: partition.n_clusters(),
        novel_quota,
        familiar_quota,
        novel_shortfall: novel.shortfall,
        familiar_shortfall: familiar.shortfall,
        fallback_count: need,
        selected: picks
            .into_iter()
            .map(|p| Selection {
                id: items[p.leaf].id().to_string(),
                phase: p.phase,
                cluster: p.cluster,
                pass: p.pass,
            })
            .collect(),
    })
}

/// Cartesian product of sweep values, budget-major, then alpha, then beta.
/// Budgets are fractions of the pool. Configs use the default threshold and
/// weights with seed 0.
pub fn plan_experiment_grid(
    alphas: &[f64],
    betas: &[f64],
    budgets: &[f64],
) -> Result<Vec<SamplingConfig>, SamplerError> {
    let mut grid = Vec::with_capacity(alphas.len() * betas.len() * budgets.len());
    for &b in budgets {
        for &alpha in alphas {
            for &beta in betas {
                grid.push(SamplingConfig::new(alpha, beta, Budget::Fraction(b))?);
            }
        }
    }
    Ok(grid)
}

/// The sweep used by the experiment harness: α in 20% steps from 0, β in 20%
/// steps from 0.2, budgets 10% to 50% of the pool.
pub fn default_grid() -> Vec<SamplingConfig> {
    plan_experiment_grid(
        &[0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
        &[0.2, 0.4, 0.6, 0.8, 1.0],
        &[0.1, 0.2, 0.3, 0.4, 0.5],
    )
    .expect("default grid is valid")
}
