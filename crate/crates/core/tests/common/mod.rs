#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trajcurate::cluster::{flat_clusters, Dendrogram, NoveltyClass};
use trajcurate::metric::CondensedDistanceMatrix;
use trajcurate::sampler::{depth_cap, sampling_round_with, PhaseTag, SamplingConfig, SelectionManifest};
use trajcurate::trajectory::{DynamicState, TrajectoryPool, TrajectoryState};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A merge in oracle form: (left node, right node, height, size).
pub type OracleMerge = (usize, usize, f64, usize);

/// Average linkage recomputed from scratch at every step: each candidate
/// linkage is the mean of all member-pair distances. Ties go to the pair of
/// clusters whose smallest leaves are lexicographically smallest; the
/// cluster holding the smaller leaf becomes the left child.
pub fn naive_upgma(d: &CondensedDistanceMatrix) -> Vec<OracleMerge> {
    let n = d.n();
    // (node id, members)
    let mut active: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut merges = Vec::new();
    while active.len() > 1 {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for x in 0..active.len() {
            for y in x + 1..active.len() {
                let (a, b) = (&active[x].1, &active[y].1);
                let mut sum = 0.0;
                for &i in a {
                    for &j in b {
                        sum += d.get(i, j);
                    }
                }
                let link = sum / (a.len() * b.len()) as f64;
                let (lo, hi) = {
                    let (ma, mb) = (a[0], b[0]);
                    if ma < mb { (ma, mb) } else { (mb, ma) }
                };
                let better = match best {
                    None => true,
                    Some((bl, blo, bhi, _, _)) => link < bl || (link == bl && (lo, hi) < (blo, bhi)),
                };
                if better {
                    best = Some((link, lo, hi, x, y));
                }
            }
        }
        let (link, _, _, x, y) = best.unwrap();
        let (x, y) = if active[x].1[0] < active[y].1[0] { (x, y) } else { (y, x) };
        let mut members = active[x].1.clone();
        members.extend(&active[y].1);
        members.sort_unstable();
        merges.push((active[x].0, active[y].0, link, members.len()));
        let node = n + merges.len() - 1;
        let (hi, lo) = if x > y { (x, y) } else { (y, x) };
        active.remove(hi);
        active.remove(lo);
        active.push((node, members));
    }
    merges
}

/// Compares a dendrogram to the oracle: identical topology, heights within
/// `tol`.
pub fn compare_to_oracle(t: &Dendrogram, oracle: &[OracleMerge], tol: f64) -> Result<(), String> {
    if t.merges().len() != oracle.len() {
        return Err(format!("{} merges vs {} in oracle", t.merges().len(), oracle.len()));
    }
    for (k, (m, o)) in t.merges().iter().zip(oracle).enumerate() {
        if (m.left, m.right, m.size) != (o.0, o.1, o.3) {
            return Err(format!(
                "merge {k}: ({}, {}, size {}) vs oracle ({}, {}, size {})",
                m.left, m.right, m.size, o.0, o.1, o.3
            ));
        }
        if (m.height - o.2).abs() > tol {
            return Err(format!("merge {k}: height {} vs oracle {}", m.height, o.2));
        }
    }
    Ok(())
}

/// Cophenetic matrix computed directly from the merge list.
pub fn cophenetic_matrix(t: &Dendrogram) -> Vec<Vec<f64>> {
    let n = t.n_leaves();
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut c = vec![vec![0.0; n]; n];
    for m in t.merges() {
        for &a in &members[m.left] {
            for &b in &members[m.right] {
                c[a][b] = m.height;
                c[b][a] = m.height;
            }
        }
        let mut joined = members[m.left].clone();
        joined.extend(members[m.right].iter().copied());
        members.push(joined);
    }
    c
}

/// Random distances. `integer` instances draw from a handful of small
/// integers, so equal linkages are common and the tie-break is exercised.
pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, integer: bool) -> CondensedDistanceMatrix {
    CondensedDistanceMatrix::from_fn(n, |_, _| {
        if integer {
            rng.random_range(0..6) as f64
        } else {
            rng.random_range(0.0..20.0)
        }
    })
    .unwrap()
}

/// Distances between clumped points on a line, so flat clusters of several
/// sizes appear at thresholds of a few units.
pub fn clumped_matrix(rng: &mut ChaCha8Rng, n: usize) -> CondensedDistanceMatrix {
    let clumps = rng.random_range(1..=(n / 2).max(1));
    let centers: Vec<f64> = (0..clumps).map(|_| rng.random_range(0.0..100.0)).collect();
    let x: Vec<f64> = (0..n)
        .map(|_| centers[rng.random_range(0..clumps)] + rng.random_range(0.0..4.0))
        .collect();
    CondensedDistanceMatrix::from_fn(n, |i, j| (x[i] - x[j]).abs()).unwrap()
}

pub fn random_state(rng: &mut ChaCha8Rng, id: &str, scale: f64) -> TrajectoryState {
    let points = std::array::from_fn(|_| [rng.random_range(-scale..scale), rng.random_range(-scale..scale)]);
    let state = DynamicState {
        v: rng.random_range(0.0..scale),
        a: rng.random_range(-scale..scale),
        h: rng.random_range(-1.0..1.0),
    };
    TrajectoryState::new(id, points, state).unwrap()
}

/// Pool of placeholder items with ids `t000…`; only ids matter to a round
/// run on a supplied dendrogram.
pub fn placeholder_pool(n: usize, labeled: &BTreeSet<usize>) -> TrajectoryPool {
    let items = (0..n)
        .map(|i| TrajectoryState::new(format!("t{i:03}"), [[0.0, 0.0]; 12], DynamicState::default()).unwrap())
        .collect();
    TrajectoryPool::with_labeled_indices(items, labeled.clone()).unwrap()
}

/// Everything needed to run and check one sampling round.
#[derive(Debug, Clone)]
pub struct RoundFixture {
    pub pool: TrajectoryPool,
    pub dendrogram: Dendrogram,
    pub cfg: SamplingConfig,
    pub round_index: u32,
}

pub const ALPHAS: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
pub const BETAS: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];

pub fn random_round_fixture(seed: u64) -> RoundFixture {
    let mut r = rng(seed);
    let n = r.random_range(2..=60);
    let dendrogram = trajcurate::cluster::upgma_linkage_owned(clumped_matrix(&mut r, n));
    let p_labeled = r.random_range(0.0..0.6);
    let mut labeled: BTreeSet<usize> = (0..n).filter(|_| r.random_bool(p_labeled)).collect();
    if labeled.len() == n {
        labeled.remove(&r.random_range(0..n));
    }
    let pool = placeholder_pool(n, &labeled);
    let alpha = if r.random_bool(0.8) { ALPHAS[r.random_range(0..ALPHAS.len())] } else { r.random_range(0.0..=1.0) };
    let beta = BETAS[r.random_range(0..BETAS.len())];
    let budget = trajcurate::sampler::Budget::Count(r.random_range(1..=n + 5));
    let mut cfg = SamplingConfig::new(alpha, beta, budget).unwrap().with_seed(r.random());
    cfg.tau = r.random_range(0.0..8.0);
    RoundFixture {
        pool,
        dendrogram,
        cfg,
        round_index: r.random_range(0..4),
    }
}

/// Checks every round invariant of a manifest against its fixture,
/// including reproducibility of the manifest.
pub fn check_round(f: &RoundFixture, m: &SelectionManifest) -> Result<(), String> {
    let pool = &f.pool;
    let cfg = &f.cfg;
    let n = pool.len();
    let unlabeled: BTreeSet<usize> = pool.unlabeled().into_iter().collect();
    let index = pool.id_index();
    let budget = cfg.budget.resolve(n);

    // purity
    let mut seen = BTreeSet::new();
    let mut leaves = Vec::new();
    for s in &m.selected {
        let leaf = *index.get(s.id.as_str()).ok_or_else(|| format!("unknown id {}", s.id))?;
        if !unlabeled.contains(&leaf) {
            return Err(format!("{} was labeled at round start", s.id));
        }
        if !seen.insert(leaf) {
            return Err(format!("{} selected twice", s.id));
        }
        leaves.push(leaf);
    }

    // budget exactness
    if m.selected.len() != budget.min(unlabeled.len()) {
        return Err(format!("selected {} with budget {budget} and {} unlabeled", m.selected.len(), unlabeled.len()));
    }

    // quotas: round half up, summing to the budget
    let novel_quota = ((cfg.alpha * budget as f64) + 0.5 + 1e-9).floor() as usize;
    let novel_quota = novel_quota.min(budget);
    if (m.novel_quota, m.familiar_quota) != (novel_quota, budget - novel_quota) {
        return Err(format!("quotas {} / {} for alpha {} and budget {budget}", m.novel_quota, m.familiar_quota, cfg.alpha));
    }

    let start = flat_clusters(&f.dendrogram, cfg.tau, pool.labeled()).map_err(|e| e.to_string())?;
    let cap = |c: usize| depth_cap(cfg.beta, start.members(c).len());

    // novel picks: from novel clusters or unlabeled singletons, each cluster in
    // one visit and within its cap
    let mut novel_per_cluster: BTreeMap<usize, usize> = BTreeMap::new();
    for (s, &leaf) in m.selected.iter().zip(&leaves) {
        let c = start.cluster_of(leaf);
        if s.cluster != c {
            return Err(format!("{} tagged with cluster {} but sits in {c}", s.id, s.cluster));
        }
        match s.phase {
            PhaseTag::NovelCluster if start.class_of(c) != NoveltyClass::Novel => {
                return Err(format!("{} tagged novel-cluster in a {:?} cluster", s.id, start.class_of(c)))
            }
            PhaseTag::NovelSingleton if start.class_of(c) != NoveltyClass::Singleton => {
                return Err(format!("{} tagged novel-singleton in a {:?} cluster", s.id, start.class_of(c)))
            }
            _ => {}
        }
        if s.phase.is_novel() {
            *novel_per_cluster.entry(c).or_default() += 1;
        }
    }
    for (&c, &k) in &novel_per_cluster {
        if k > cap(c) {
            return Err(format!("novel phase took {k} from cluster {c} with cap {}", cap(c)));
        }
    }

    // familiar picks: from clusters holding a label once the novel picks
    // count as labeled, within the cap per pass
    let novel_leaves: BTreeSet<usize> = m
        .selected
        .iter()
        .zip(&leaves)
        .filter(|(s, _)| s.phase.is_novel())
        .map(|(_, &l)| l)
        .collect();
    let after = start.refresh(&novel_leaves).map_err(|e| e.to_string())?;
    let familiar = after.familiar_clusters();
    let mut per_pass: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for s in m.selected.iter().filter(|s| s.phase == PhaseTag::Familiar) {
        if !familiar.contains(&s.cluster) {
            return Err(format!("{} tagged familiar outside the familiar clusters", s.id));
        }
        if s.pass == 0 {
            return Err(format!("{} tagged familiar without a pass", s.id));
        }
        *per_pass.entry((s.cluster, s.pass)).or_default() += 1;
    }
    for (&(c, pass), &k) in &per_pass {
        if k > cap(c) {
            return Err(format!("pass {pass} took {k} from cluster {c} with cap {}", cap(c)));
        }
    }

    // novel-fraction accounting when supply suffices
    let novel_count = m.count(PhaseTag::is_novel);
    let supply: usize = (0..start.n_clusters())
        .map(|c| match start.class_of(c) {
            NoveltyClass::Novel => cap(c).min(start.members(c).len()),
            NoveltyClass::Singleton => 1,
            _ => 0,
        })
        .sum();
    if supply >= novel_quota && novel_count != novel_quota {
        return Err(format!("{novel_count} novel picks with quota {novel_quota} and supply {supply}"));
    }
    if novel_count + m.novel_shortfall != novel_quota {
        return Err("novel shortfall does not balance".into());
    }
    let familiar_count = m.count(|p| p == PhaseTag::Familiar);
    if familiar_count + m.familiar_shortfall != m.familiar_quota {
        return Err("familiar shortfall does not balance".into());
    }
    if m.count(|p| p == PhaseTag::Fallback) != m.fallback_count {
        return Err("fallback count does not match tags".into());
    }

    // degenerate alphas
    if novel_quota == 0 && novel_count > 0 {
        return Err("alpha 0 produced novel picks".into());
    }
    if novel_quota == budget && familiar_count > 0 {
        return Err("alpha 1 produced familiar picks".into());
    }

    // determinism
    let again = sampling_round_with(pool, &f.dendrogram, cfg, f.round_index).map_err(|e| e.to_string())?;
    if serde_json::to_string(&again).unwrap() != serde_json::to_string(m).unwrap() {
        return Err("rerun produced a different manifest".into());
    }
    Ok(())
}
