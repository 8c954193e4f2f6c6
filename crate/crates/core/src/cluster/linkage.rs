//! UPGMA (average linkage) agglomeration.
//!
//! The implementation follows the generic priority-queue scheme: every active
//! cluster slot keeps a lower bound on the linkage to its nearest neighbour
//! among higher slots, and bounds are only tightened when they reach the top
//! of the queue. A cluster occupies the slot of its smallest leaf id, so the
//! global order `(linkage, lower slot, higher slot)` implements the tie-break
//! on `(min member leaf id, max member leaf id)` of the two candidates.
//!
//! Instead of averages the working matrix holds sums of member-pair
//! distances, which are merged by plain addition. The linkage of two clusters
//! is that sum divided by the product of their sizes.

use std::cmp::Ordering;

use super::dendrogram::{Dendrogram, Merge};
use crate::metric::{condensed_index, CondensedDistanceMatrix};

/// Builds the UPGMA dendrogram of a condensed distance matrix.
pub fn upgma_linkage(d: &CondensedDistanceMatrix) -> Dendrogram {
    upgma_linkage_owned(d.clone())
}

/// Like [`upgma_linkage`] but reuses the matrix storage as working memory.
pub fn upgma_linkage_owned(d: CondensedDistanceMatrix) -> Dendrogram {
    let n = d.n();
    let mut state = Agglomeration::new(n, d.into_values());
    let merges = state.run();
    Dendrogram::from_parts_unchecked(n, merges)
}

struct Agglomeration {
    n: usize,
    sums: Vec<f64>,
    size: Vec<usize>,
    node: Vec<usize>,
    active: Vec<bool>,
    nn: Vec<usize>,
    mindist: Vec<f64>,
    heap: SlotHeap,
}

impl Agglomeration {
    fn new(n: usize, sums: Vec<f64>) -> Self {
        Self {
            n,
            sums,
            size: vec![1; n],
            node: (0..n).collect(),
            active: vec![true; n],
            nn: vec![usize::MAX; n],
            mindist: vec![f64::INFINITY; n],
            heap: SlotHeap::new(n),
        }
    }

    #[inline]
    fn linkage(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        self.sums[condensed_index(self.n, lo, hi)] / (self.size[lo] * self.size[hi]) as f64
    }

    /// Exact nearest higher neighbour of slot `a`, smallest slot on ties.
    fn refresh_row(&mut self, a: usize) {
        let mut best = f64::INFINITY;
        let mut arg = usize::MAX;
        for b in a + 1..self.n {
            if !self.active[b] {
                continue;
            }
            let l = self.linkage(a, b);
            if l < best {
                best = l;
                arg = b;
            }
        }
        self.mindist[a] = best;
        self.nn[a] = arg;
    }

    fn run(&mut self) -> Vec<Merge> {
        let n = self.n;
        let mut merges = Vec::with_capacity(n.saturating_sub(1));
        if n < 2 {
            return merges;
        }
        for a in 0..n - 1 {
            self.refresh_row(a);
        }
        self.heap.build(&self.mindist, (0..n - 1).collect());

        let mut last_height = 0.0f64;
        for _ in 0..n - 1 {
            // Pop until the top bound is exact.
            let a = loop {
                let a = self.heap.top().expect("active pairs remain");
                let b = self.nn[a];
                if b != usize::MAX && self.active[b] && self.linkage(a, b) == self.mindist[a] {
                    break a;
                }
                self.refresh_row(a);
                self.heap.update(a, &self.mindist);
            };
            let b = self.nn[a];
            // Rounding in the merged sums can undercut the previous height by
            // an ulp; UPGMA heights are monotone.
            let height = self.mindist[a].max(last_height);
            last_height = height;

            let new_size = self.size[a] + self.size[b];
            merges.push(Merge {
                left: self.node[a],
                right: self.node[b],
                height,
                size: new_size,
            });

            self.active[b] = false;
            self.heap.remove(b, &self.mindist);
            for x in 0..n {
                if x == a || !self.active[x] {
                    continue;
                }
                let (xa, xb) = (ordered(n, x, a), ordered(n, x, b));
                self.sums[xa] += self.sums[xb];
            }
            self.size[a] = new_size;
            self.node[a] = n + merges.len() - 1;

            for x in 0..a {
                if !self.active[x] {
                    continue;
                }
                let l = self.linkage(x, a);
                if l < self.mindist[x] || (l == self.mindist[x] && a < self.nn[x]) {
                    self.mindist[x] = l;
                    self.nn[x] = a;
                    self.heap.update(x, &self.mindist);
                }
            }
            self.refresh_row(a);
            if self.nn[a] == usize::MAX {
                self.heap.remove(a, &self.mindist);
            } else {
                self.heap.update(a, &self.mindist);
            }
        }
        merges
    }
}

#[inline]
fn ordered(n: usize, i: usize, j: usize) -> usize {
    if i < j {
        condensed_index(n, i, j)
    } else {
        condensed_index(n, j, i)
    }
}

/// Binary min-heap of slots keyed by `(mindist[slot], slot)` with position
/// tracking for in-place key updates.
struct SlotHeap {
    heap: Vec<usize>,
    pos: Vec<usize>,
}

const ABSENT: usize = usize::MAX;

impl SlotHeap {
    fn new(n: usize) -> Self {
        Self {
            heap: Vec::with_capacity(n),
            pos: vec![ABSENT; n],
        }
    }

    #[inline]
    fn less(keys: &[f64], a: usize, b: usize) -> bool {
        match keys[a].total_cmp(&keys[b]) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => a < b,
        }
    }

    fn build(&mut self, keys: &[f64], slots: Vec<usize>) {
        self.heap = slots;
        for (i, &s) in self.heap.iter().enumerate() {
            self.pos[s] = i;
        }
        for i in (0..self.heap.len() / 2).rev() {
            self.sift_down(i, keys);
        }
    }

    fn top(&self) -> Option<usize> {
        self.heap.first().copied()
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.heap.swap(i, j);
        self.pos[self.heap[i]] = i;
        self.pos[self.heap[j]] = j;
    }

    fn sift_up(&mut self, mut i: usize, keys: &[f64]) {
        while i > 0 {
            let p = (i - 1) / 2;
            if Self::less(keys, self.heap[i], self.heap[p]) {
                self.swap(i, p);
                i = p;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize, keys: &[f64]) {
        let len = self.heap.len();
        loop {
            let l = 2 * i + 1;
            let r = l + 1;
            let mut m = i;
            if l < len && Self::less(keys, self.heap[l], self.heap[m]) {
                m = l;
            }
            if r < len && Self::less(keys, self.heap[r], self.heap[m]) {
                m = r;
            }
            if m == i {
                break;
            }
            self.swap(i, m);
            i = m;
        }
    }

    fn update(&mut self, slot: usize, keys: &[f64]) {
        let i = self.pos[slot];
        if i == ABSENT {
            return;
        }
        self.sift_up(i, keys);
        self.sift_down(self.pos[slot], keys);
    }

    fn remove(&mut self, slot: usize, keys: &[f64]) {
        let i = self.pos[slot];
        if i == ABSENT {
            return;
        }
        let last = self.heap.len() - 1;
        self.swap(i, last);
        self.heap.pop();
        self.pos[slot] = ABSENT;
        if i < self.heap.len() {
            let moved = self.heap[i];
            self.sift_up(i, keys);
            self.sift_down(self.pos[moved], keys);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(n: usize, v: &[f64]) -> CondensedDistanceMatrix {
        CondensedDistanceMatrix::from_values(n, v.to_vec()).unwrap()
    }

    #[test]
    fn two_leaves() {
        let t = upgma_linkage(&matrix(2, &[7.0]));
        assert_eq!(t.merges(), &[Merge { left: 0, right: 1, height: 7.0, size: 2 }]);
    }

    #[test]
    fn three_leaves_by_hand() {
        // d(A,B)=1, d(A,C)=5, d(B,C)=7
        let t = upgma_linkage(&matrix(3, &[1.0, 5.0, 7.0]));
        assert_eq!(
            t.merges(),
            &[
                Merge { left: 0, right: 1, height: 1.0, size: 2 },
                Merge { left: 3, right: 2, height: 6.0, size: 3 },
            ]
        );
        assert_eq!(t.cophenetic_distance(0, 2).unwrap(), 6.0);
    }

    #[test]
    fn single_and_empty() {
        assert!(upgma_linkage(&matrix(1, &[])).merges().is_empty());
        assert!(upgma_linkage(&matrix(0, &[])).merges().is_empty());
    }

    #[test]
    fn ties_prefer_smallest_leaf_pair() {
        // all four leaves equidistant: (0,1) first, then (0,2) via node 4,
        // then with 3
        let t = upgma_linkage(&matrix(4, &[1.0; 6]));
        let pairs: Vec<(usize, usize)> = t.merges().iter().map(|m| (m.left, m.right)).collect();
        assert_eq!(pairs, vec![(0, 1), (4, 2), (5, 3)]);
    }

    #[test]
    fn tie_break_uses_cluster_min_leaf() {
        // leaves 2 and 3 merge first; then (0,1) at 4.0 ties with
        // ({2,3}, 1) at 4.0 → key (0,1) beats (1,2)
        let n = 4;
        let d = CondensedDistanceMatrix::from_fn(n, |i, j| match (i, j) {
            (2, 3) => 1.0,
            (0, 1) => 4.0,
            (1, 2) | (1, 3) => 4.0,
            _ => 9.0,
        })
        .unwrap();
        let t = upgma_linkage(&d);
        let pairs: Vec<(usize, usize)> = t.merges().iter().map(|m| (m.left, m.right)).collect();
        assert_eq!(pairs, vec![(2, 3), (0, 1), (5, 4)]);
    }

    #[test]
    fn output_satisfies_dendrogram_invariants() {
        let n = 30;
        let d = CondensedDistanceMatrix::from_fn(n, |i, j| ((i * 31 + j * 17) % 23) as f64 + 0.5)
            .unwrap();
        let t = upgma_linkage(&d);
        Dendrogram::new(n, t.merges().to_vec()).unwrap();
    }
}
