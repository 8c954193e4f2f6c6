//! Active learning sweep against a paired uniform-random baseline.
//!
//! The synthetic pool is split once into a training part and a held-out
//! part (stratified by motif). For every seed an initial labeled set is drawn
//! from the training part; every grid cell then grows it to the budget once
//! with a sampling round and once uniformly at random. Both labeled sets feed
//! the k-NN surrogate, which is scored on the same held-out items.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::knn::{knn_predict, min_ade_k, Query};
use super::synth::SyntheticPool;
use super::BenchError;
use crate::cluster::Dendrogram;
use crate::io::fmt::g17;
use crate::metric::MetricWeights;
use crate::rng::experiment_stream;
use crate::sampler::{cluster_pool, sampling_round_with, Budget, SamplingConfig};
use crate::trajectory::{TrajectoryPool, TrajectoryState};

const PURPOSE_SPLIT: u8 = 1;
const PURPOSE_INITIAL: u8 = 2;
const PURPOSE_RANDOM: u8 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    /// Predicted modes per query; minADE_5 and minADE_10 use the first 5
    /// and 10.
    pub k_modes: usize,
    /// Share of each motif held out for scoring.
    pub holdout_fraction: f64,
    /// Share of the training part labeled before the round.
    pub initial_fraction: f64,
    /// Seed of the held-out split, shared by every cell.
    pub split_seed: u64,
    /// Weights of the predictor's prefix distance.
    pub knn_weights: MetricWeights,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            k_modes: 10,
            holdout_fraction: 0.2,
            initial_fraction: 0.02,
            split_seed: 0,
            knn_weights: MetricWeights::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Active,
    Random,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Active => "active",
            Strategy::Random => "random",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    /// Labeled pool size as a fraction of the training part.
    pub budget: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub strategy: Strategy,
    pub made5: f64,
    pub made10: f64,
}

/// Mean metrics over the rows of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMean {
    pub made5: f64,
    pub made10: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentResult {
    pub rows: Vec<ExperimentRow>,
}

pub const CSV_HEADER: &str = "budget,alpha,beta,seed,strategy,made5,made10";

impl ExperimentResult {
    /// Mean over seeds of the rows matching (budget, alpha, beta, strategy).
    pub fn mean(&self, budget: f64, alpha: f64, beta: f64, strategy: Strategy) -> Option<CellMean> {
        let sel: Vec<&ExperimentRow> = self
            .rows
            .iter()
            .filter(|r| r.budget == budget && r.alpha == alpha && r.beta == beta && r.strategy == strategy)
            .collect();
        if sel.is_empty() {
            return None;
        }
        let n = sel.len() as f64;
        Some(CellMean {
            made5: sel.iter().map(|r| r.made5).sum::<f64>() / n,
            made10: sel.iter().map(|r| r.made10).sum::<f64>() / n,
            count: sel.len(),
        })
    }

    /// Improvement over the random baseline, `random − active`, for both
    /// metrics. Positive means the sampling round did better.
    pub fn improvement_over_random(&self, budget: f64, alpha: f64, beta: f64) -> Option<(f64, f64)> {
        let active = self.mean(budget, alpha, beta, Strategy::Active)?;
        let random = self.mean(budget, alpha, beta, Strategy::Random)?;
        Some((random.made5 - active.made5, random.made10 - active.made10))
    }

    /// Checks that every active row has a random row with the same budget,
    /// alpha, beta and seed.
    pub fn is_paired(&self) -> bool {
        let key = |r: &ExperimentRow| (r.budget.to_bits(), r.alpha.to_bits(), r.beta.to_bits(), r.seed);
        let random: BTreeSet<_> = self
            .rows
            .iter()
            .filter(|r| r.strategy == Strategy::Random)
            .map(key)
            .collect();
        self.rows
            .iter()
            .filter(|r| r.strategy == Strategy::Active)
            .all(|r| random.contains(&key(r)))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                g17(r.budget),
                g17(r.alpha),
                g17(r.beta),
                r.seed,
                r.strategy.as_str(),
                g17(r.made5),
                g17(r.made10)
            )?;
        }
        Ok(())
    }

    pub fn read_csv(text: &str) -> Result<Self, BenchError> {
        let mut lines = text.lines();
        if lines.next() != Some(CSV_HEADER) {
            return Err(BenchError::InvalidArgument("experiment CSV header mismatch".into()));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let bad = || BenchError::InvalidArgument(format!("experiment CSV row {}: {line:?}", i + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            rows.push(ExperimentRow {
                budget: num(f[0])?,
                alpha: num(f[1])?,
                beta: num(f[2])?,
                seed: f[3].parse().map_err(|_| bad())?,
                strategy: match f[4] {
                    "active" => Strategy::Active,
                    "random" => Strategy::Random,
                    _ => return Err(bad()),
                },
                made5: num(f[5])?,
                made10: num(f[6])?,
            });
        }
        Ok(Self { rows })
    }
}

/// Held-out split: `round(fraction · count)` items of every motif, drawn
/// with the split seed. Returns (train, test) indices, ascending.
pub fn stratified_split(motif: &[usize], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut by_motif: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &m) in motif.iter().enumerate() {
        by_motif.entry(m).or_default().push(i);
    }
    let mut test = BTreeSet::new();
    for (m, members) in by_motif {
        let take = ((fraction * members.len() as f64 + 0.5).floor() as usize).min(members.len());
        let mut rng = experiment_stream(seed, PURPOSE_SPLIT, m as u32);
        for k in index::sample(&mut rng, members.len(), take) {
            test.insert(members[k]);
        }
    }
    let train = (0..motif.len()).filter(|i| !test.contains(i)).collect();
    (train, test.into_iter().collect())
}

fn weights_key(w: &MetricWeights) -> [u64; 3] {
    [w.k_a.to_bits(), w.k_v.to_bits(), w.k_h.to_bits()]
}

fn score(
    labeled: &[&TrajectoryState],
    test: &[TrajectoryState],
    k_modes: usize,
    w: &MetricWeights,
) -> Result<(f64, f64), BenchError> {
    let mut sum5 = 0.0;
    let mut sum10 = 0.0;
    for t in test {
        let preds = knn_predict(&Query::of(t), labeled, k_modes, w)?;
        sum5 += min_ade_k(&preds, t.points(), 5)?;
        sum10 += min_ade_k(&preds, t.points(), 10)?;
    }
    let n = test.len() as f64;
    Ok((sum5 / n, sum10 / n))
}

fn budget_fraction(cfg: &SamplingConfig, n_train: usize) -> f64 {
    match cfg.budget {
        Budget::Fraction(f) => f,
        Budget::Count(c) => c as f64 / n_train as f64,
    }
}

/// Runs the sweep. Rows are ordered by grid config, then seed, with the
/// active row before its random partner.
pub fn run_al_experiment(
    pool: &SyntheticPool,
    grid: &[SamplingConfig],
    seeds: &[u64],
    opts: &ExperimentOptions,
) -> Result<ExperimentResult, BenchError> {
    if opts.k_modes == 0 {
        return Err(BenchError::InvalidArgument("k_modes must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&opts.holdout_fraction) || !(0.0..1.0).contains(&opts.initial_fraction) {
        return Err(BenchError::InvalidArgument("fractions must lie in [0, 1)".into()));
    }
    for cfg in grid {
        cfg.validate().map_err(|e| BenchError::InvalidArgument(e.to_string()))?;
    }
    let (train_idx, test_idx) = stratified_split(&pool.motif, opts.holdout_fraction, opts.split_seed);
    if test_idx.is_empty() {
        return Err(BenchError::InsufficientPool("held-out split is empty".into()));
    }
    let train: Vec<TrajectoryState> = train_idx.iter().map(|&i| pool.items[i].clone()).collect();
    let test: Vec<TrajectoryState> = test_idx.iter().map(|&i| pool.items[i].clone()).collect();
    let n_train = train.len();
    let n_initial = ((opts.initial_fraction * n_train as f64 + 0.5).floor() as usize).max(1);

    let targets: Vec<usize> = grid.iter().map(|c| c.budget.resolve(n_train)).collect();
    if let Some(&t) = targets.iter().max() {
        if t > n_train || n_initial >= n_train {
            return Err(BenchError::InsufficientPool(format!(
                "training part has {n_train} items, budget needs {t}"
            )));
        }
    }
    if let Some(&t) = targets.iter().find(|&&t| t < n_initial) {
        return Err(BenchError::InsufficientPool(format!(
            "budget of {t} items is below the initial labeled set of {n_initial}"
        )));
    }

    let base_pool = TrajectoryPool::new(train.clone()).map_err(|e| BenchError::InvalidArgument(e.to_string()))?;
    let mut dendrograms: HashMap<[u64; 3], Dendrogram> = HashMap::new();
    for cfg in grid {
        dendrograms
            .entry(weights_key(&cfg.weights))
            .or_insert_with(|| cluster_pool(&base_pool, &cfg.weights));
    }

    let initial: HashMap<u64, BTreeSet<usize>> = seeds
        .iter()
        .map(|&s| {
            let mut rng = experiment_stream(s, PURPOSE_INITIAL, 0);
            (s, index::sample(&mut rng, n_train, n_initial).into_iter().collect())
        })
        .collect();

    let labeled_refs = |set: &BTreeSet<usize>| -> Vec<&TrajectoryState> { set.iter().map(|&i| &train[i]).collect() };

    // Random baselines depend only on (target size, seed) and are shared by
    // every config with that budget.
    let mut baseline_keys: Vec<(usize, u64)> = targets
        .iter()
        .flat_map(|&t| seeds.iter().map(move |&s| (t, s)))
        .collect();
    baseline_keys.sort_unstable();
    baseline_keys.dedup();
    let baselines: HashMap<(usize, u64), (f64, f64)> = baseline_keys
        .par_iter()
        .map(|&(target, seed)| {
            let init = &initial[&seed];
            let rest: Vec<usize> = (0..n_train).filter(|i| !init.contains(i)).collect();
            let mut rng = experiment_stream(seed, PURPOSE_RANDOM, target as u32);
            let mut set = init.clone();
            for k in index::sample(&mut rng, rest.len(), target - n_initial) {
                set.insert(rest[k]);
            }
            score(&labeled_refs(&set), &test, opts.k_modes, &opts.knn_weights).map(|s| ((target, seed), s))
        })
        .collect::<Result<_, _>>()?;

    let cells: Vec<(usize, u64)> = (0..grid.len())
        .flat_map(|c| seeds.iter().map(move |&s| (c, s)))
        .collect();
    let rows: Vec<[ExperimentRow; 2]> = cells
        .par_iter()
        .map(|&(c, seed)| -> Result<[ExperimentRow; 2], BenchError> {
            let cfg = &grid[c];
            let target = targets[c];
            let init = &initial[&seed];
            let mut set = init.clone();
            let extra = target - n_initial;
            if extra > 0 {
                let pool = TrajectoryPool::with_labeled_indices(train.clone(), init.clone())
                    .map_err(|e| BenchError::InvalidArgument(e.to_string()))?;
                let round_cfg = SamplingConfig {
                    budget: Budget::Count(extra),
                    seed,
                    ..*cfg
                };
                let dendrogram = &dendrograms[&weights_key(&cfg.weights)];
                let manifest = sampling_round_with(&pool, dendrogram, &round_cfg, c as u32)
                    .map_err(|e| BenchError::InvalidArgument(e.to_string()))?;
                let index = pool.id_index();
                set.extend(manifest.selected_ids().map(|id| index[id]));
            }
            let (a5, a10) = score(&labeled_refs(&set), &test, opts.k_modes, &opts.knn_weights)?;
            let (r5, r10) = baselines[&(target, seed)];
            let budget = budget_fraction(cfg, n_train);
            let row = |strategy, made5, made10| ExperimentRow {
                budget,
                alpha: cfg.alpha,
                beta: cfg.beta,
                seed,
                strategy,
                made5,
                made10,
            };
            Ok([row(Strategy::Active, a5, a10), row(Strategy::Random, r5, r10)])
        })
        .collect::<Result<_, _>>()?;

    Ok(ExperimentResult {
        rows: rows.into_iter().flatten().collect(),
    })
}
