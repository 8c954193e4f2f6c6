use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::dendrogram::Dendrogram;
use super::ClusterError;

/// Novelty class of a flat cluster relative to the labeled set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoveltyClass {
    /// Two or more members, none labeled.
    Novel,
    /// One unlabeled member.
    Singleton,
    /// At least one labeled member.
    Familiar,
    /// One member which is already labeled; never sampled.
    LabeledSingleton,
}

impl NoveltyClass {
    pub fn as_str(self) -> &'static str {
        match self {
            NoveltyClass::Novel => "novel",
            NoveltyClass::Singleton => "singleton",
            NoveltyClass::Familiar => "familiar",
            NoveltyClass::LabeledSingleton => "labeled-singleton",
        }
    }
}

/// Flat clusters cut at `tau`, split by novelty.
///
/// Leaves are identified by their index in the clustered pool. Cluster labels
/// are dense and numbered in order of each cluster's smallest leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPartition {
    tau: f64,
    assignments: Vec<usize>,
    members: Vec<Vec<usize>>,
    labeled: BTreeSet<usize>,
    classes: Vec<NoveltyClass>,
}

impl ClusterPartition {
    fn from_assignments(tau: f64, assignments: Vec<usize>, labeled: BTreeSet<usize>) -> Self {
        let k = assignments.iter().max().map_or(0, |m| m + 1);
        let mut members = vec![Vec::new(); k];
        for (leaf, &c) in assignments.iter().enumerate() {
            members[c].push(leaf);
        }
        let mut p = Self {
            tau,
            assignments,
            members,
            labeled,
            classes: Vec::new(),
        };
        p.classify();
        p
    }

    fn classify(&mut self) {
        self.classes = self
            .members
            .iter()
            .map(|m| {
                let any_labeled = m.iter().any(|i| self.labeled.contains(i));
                match (m.len(), any_labeled) {
                    (1, true) => NoveltyClass::LabeledSingleton,
                    (1, false) => NoveltyClass::Singleton,
                    (_, true) => NoveltyClass::Familiar,
                    (_, false) => NoveltyClass::Novel,
                }
            })
            .collect();
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n_leaves(&self) -> usize {
        self.assignments.len()
    }

    pub fn n_clusters(&self) -> usize {
        self.members.len()
    }

    /// Cluster label of every leaf.
    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn cluster_of(&self, leaf: usize) -> usize {
        self.assignments[leaf]
    }

    /// Members of a cluster, ascending.
    pub fn members(&self, cluster: usize) -> &[usize] {
        &self.members[cluster]
    }

    pub fn labeled(&self) -> &BTreeSet<usize> {
        &self.labeled
    }

    pub fn is_labeled(&self, leaf: usize) -> bool {
        self.labeled.contains(&leaf)
    }

    pub fn class_of(&self, cluster: usize) -> NoveltyClass {
        self.classes[cluster]
    }

    pub fn leaf_class(&self, leaf: usize) -> NoveltyClass {
        self.classes[self.assignments[leaf]]
    }

    fn clusters_of(&self, class: NoveltyClass) -> impl Iterator<Item = usize> + '_ {
        self.classes
            .iter()
            .enumerate()
            .filter(move |(_, c)| **c == class)
            .map(|(i, _)| i)
    }

    /// Clusters with two or more members and no labeled member (C_n).
    pub fn novel_clusters(&self) -> BTreeSet<usize> {
        self.clusters_of(NoveltyClass::Novel).collect()
    }

    /// Leaves alone in their cluster and unlabeled (V_n).
    pub fn singletons(&self) -> BTreeSet<usize> {
        self.clusters_of(NoveltyClass::Singleton)
            .map(|c| self.members[c][0])
            .collect()
    }

    /// Clusters with at least one labeled member (C_t). This includes
    /// labeled singletons, which hold nothing left to sample.
    pub fn familiar_clusters(&self) -> BTreeSet<usize> {
        self.classes
            .iter()
            .enumerate()
            .filter(|(_, c)| matches!(c, NoveltyClass::Familiar | NoveltyClass::LabeledSingleton))
            .map(|(i, _)| i)
            .collect()
    }

    /// Unlabeled members of a cluster, ascending.
    pub fn unlabeled_members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.members[cluster]
            .iter()
            .copied()
            .filter(|i| !self.labeled.contains(i))
    }

    /// Recomputes the novelty split after labeling more leaves. Cluster
    /// assignments are kept.
    pub fn refresh(&self, newly_labeled: &BTreeSet<usize>) -> Result<Self, ClusterError> {
        if let Some(&bad) = newly_labeled.iter().find(|&&i| i >= self.n_leaves()) {
            return Err(ClusterError::UnknownLeaf(bad));
        }
        let mut p = self.clone();
        p.labeled.extend(newly_labeled.iter().copied());
        p.classify();
        Ok(p)
    }
}

/// Cuts the dendrogram into maximal subtrees whose root height is at most
/// `tau` and classifies each cluster against `labeled`.
pub fn flat_clusters(
    t: &Dendrogram,
    tau: f64,
    labeled: &BTreeSet<usize>,
) -> Result<ClusterPartition, ClusterError> {
    if !(tau >= 0.0) {
        return Err(ClusterError::InvalidTau(tau));
    }
    let n = t.n_leaves();
    if let Some(&bad) = labeled.iter().find(|&&i| i >= n) {
        return Err(ClusterError::UnknownLeaf(bad));
    }

    // Heights are monotone, so the merges at or below tau form a forest of
    // complete subtrees; union their leaves.
    let mut uf: Vec<usize> = (0..n + t.merges().len()).collect();
    fn find(uf: &mut [usize], mut x: usize) -> usize {
        while uf[x] != x {
            uf[x] = uf[uf[x]];
            x = uf[x];
        }
        x
    }
    for (k, m) in t.merges().iter().enumerate() {
        if m.height <= tau {
            let node = n + k;
            let l = find(&mut uf, m.left);
            let r = find(&mut uf, m.right);
            uf[l] = node;
            uf[r] = node;
        }
    }

    let mut label_of_root = std::collections::HashMap::new();
    let mut assignments = Vec::with_capacity(n);
    for leaf in 0..n {
        let root = find(&mut uf, leaf);
        let next = label_of_root.len();
        assignments.push(*label_of_root.entry(root).or_insert(next));
    }
    Ok(ClusterPartition::from_assignments(tau, assignments, labeled.clone()))
}

/// Applies new labels to a partition without re-clustering.
pub fn refresh_partition(
    p: &ClusterPartition,
    newly_labeled: &BTreeSet<usize>,
) -> Result<ClusterPartition, ClusterError> {
    p.refresh(newly_labeled)
}
