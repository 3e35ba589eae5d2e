//! Choosing support-disjoint operators for one mixer layer.
//!
//! Candidates become nodes of an incompatibility graph (edge iff supports
//! overlap) weighted by `|score|`. Three selectors run on the same graph:
//!
//! * [`select_single_adapt`]: the single heaviest node.
//! * [`solve_greedy_tetris`]: repeatedly take the heaviest compatible node.
//! * [`solve_mwis_exact`]: exact maximum-weight independent set by
//!   branch-and-bound.
//!
//! Ties between equal weights are broken by label order (operator names for
//! pool graphs), so every selector is deterministic.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::clock::{Clock, NoClock};
use crate::pool::{PoolOperator, ScoredPool};

/// Default wall-clock budget for one exact solve before falling back to greedy.
pub const MWIS_TIME_BUDGET_SECS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Eq)]
struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    fn empty(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
        }
    }

    fn full(len: usize) -> Self {
        let mut s = Self::empty(len);
        for i in 0..len {
            s.insert(i);
        }
        s
    }

    fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn remove(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    fn first(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(k, w)| k * 64 + w.trailing_zeros() as usize)
    }

    fn intersect(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    fn subtract(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Undirected conflict graph over weighted candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct IncompatibilityGraph {
    labels: Vec<String>,
    weights: Vec<f64>,
    adjacency: Vec<BitSet>,
}

impl IncompatibilityGraph {
    /// Nodes conflict iff their support masks intersect.
    pub fn from_supports(labels: Vec<String>, weights: Vec<f64>, supports: &[u64]) -> Self {
        assert_eq!(labels.len(), weights.len());
        assert_eq!(labels.len(), supports.len());
        let len = labels.len();
        let mut adjacency = vec![BitSet::empty(len); len];
        for u in 0..len {
            for v in u + 1..len {
                if supports[u] & supports[v] != 0 {
                    adjacency[u].insert(v);
                    adjacency[v].insert(u);
                }
            }
        }
        Self {
            labels,
            weights,
            adjacency,
        }
    }

    /// Arbitrary graph from an edge list. Self-loops are ignored.
    pub fn from_edges(labels: Vec<String>, weights: Vec<f64>, edges: &[(usize, usize)]) -> Self {
        assert_eq!(labels.len(), weights.len());
        let len = labels.len();
        let mut adjacency = vec![BitSet::empty(len); len];
        for &(u, v) in edges {
            if u != v {
                adjacency[u].insert(v);
                adjacency[v].insert(u);
            }
        }
        Self {
            labels,
            weights,
            adjacency,
        }
    }

    /// Graph over the retained candidates of a scored pool, weights `|g_j|`.
    /// Node `i` corresponds to `candidate_ops(scored)[i]`.
    pub fn from_scored(scored: &ScoredPool, n: usize) -> Self {
        let mut labels = Vec::new();
        let mut weights = Vec::new();
        let mut supports = Vec::new();
        for (op, score) in scored.candidates() {
            labels.push(op.name());
            weights.push(score.abs());
            supports.push(op.support_mask(n));
        }
        Self::from_supports(labels, weights, &supports)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].contains(v)
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].count()
    }

    /// Edges `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.len() {
            for v in u + 1..self.len() {
                if self.has_edge(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn is_independent(&self, nodes: &[usize]) -> bool {
        nodes
            .iter()
            .enumerate()
            .all(|(i, &u)| nodes[i + 1..].iter().all(|&v| u != v && !self.has_edge(u, v)))
    }

    /// Heaviest first, label order on ties.
    fn priority(&self, a: usize, b: usize) -> Ordering {
        self.weights[b]
            .partial_cmp(&self.weights[a])
            .unwrap_or(Ordering::Equal)
            .then_with(|| self.labels[a].cmp(&self.labels[b]))
            .then(a.cmp(&b))
    }

    fn priority_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.priority(a, b));
        order
    }

    fn selection(&self, mut chosen: Vec<usize>, exact: bool) -> TileSelection {
        chosen.sort_unstable();
        let total_weight = chosen.iter().map(|&i| self.weights[i]).sum();
        TileSelection {
            chosen,
            total_weight,
            exact,
        }
    }
}

/// Node indices of an independent set and their summed weight.
#[derive(Debug, Clone, PartialEq)]
pub struct TileSelection {
    /// Sorted node indices.
    pub chosen: Vec<usize>,
    pub total_weight: f64,
    /// False when the exact solver ran out of time and returned the greedy set.
    pub exact: bool,
}

/// Operators of the retained candidates, in graph node order.
pub fn candidate_ops(scored: &ScoredPool) -> Vec<PoolOperator> {
    scored.candidates().map(|(op, _)| *op).collect()
}

pub fn select_single_adapt(g: &IncompatibilityGraph) -> TileSelection {
    let best = (0..g.len()).min_by(|&a, &b| g.priority(a, b));
    g.selection(best.into_iter().collect(), true)
}

pub fn solve_greedy_tetris(g: &IncompatibilityGraph) -> TileSelection {
    let mut blocked = BitSet::empty(g.len());
    let mut chosen = Vec::new();
    for v in g.priority_order() {
        if !blocked.contains(v) {
            chosen.push(v);
            blocked.insert(v);
            for (b, a) in blocked.words.iter_mut().zip(&g.adjacency[v].words) {
                *b |= a;
            }
        }
    }
    g.selection(chosen, true)
}

pub fn solve_mwis_exact(g: &IncompatibilityGraph) -> TileSelection {
    solve_mwis_exact_within(g, &NoClock, f64::INFINITY)
}

/// Exact MWIS by branch-and-bound on the heaviest remaining vertex
/// (include/exclude), seeded with the greedy solution as incumbent and pruned
/// by a greedy clique-cover bound. If `budget_secs` elapses on `clock`, the
/// greedy solution is returned with `exact = false`.
pub fn solve_mwis_exact_within(
    g: &IncompatibilityGraph,
    clock: &dyn Clock,
    budget_secs: f64,
) -> TileSelection {
    let greedy = solve_greedy_tetris(g);
    if g.len() <= 1 {
        return greedy;
    }
    // Relabel so that index order is priority order.
    let order = g.priority_order();
    let mut position = vec![0; g.len()];
    for (p, &v) in order.iter().enumerate() {
        position[v] = p;
    }
    let adjacency = order
        .iter()
        .map(|&v| {
            let mut set = BitSet::empty(g.len());
            for (u, &pos) in position.iter().enumerate() {
                if g.adjacency[v].contains(u) {
                    set.insert(pos);
                }
            }
            set
        })
        .collect();
    let weights = order.iter().map(|&v| g.weights[v]).collect();
    let mut search = Search {
        adjacency,
        weights,
        best_weight: greedy.total_weight,
        best: greedy.chosen.iter().map(|&v| position[v]).collect(),
        current: Vec::new(),
        visited: 0,
        clock,
        deadline: clock.seconds() + budget_secs,
        aborted: false,
    };
    search.expand(BitSet::full(g.len()), 0.0);
    if search.aborted {
        log::warn!(
            "exact MWIS exceeded {budget_secs} s on {} nodes; using greedy tiling",
            g.len()
        );
        return TileSelection {
            exact: false,
            ..greedy
        };
    }
    let chosen = search.best.iter().map(|&p| order[p]).collect();
    let exact = g.selection(chosen, true);
    // Never report less than the incumbent because of summation order.
    if exact.total_weight < greedy.total_weight {
        greedy
    } else {
        exact
    }
}

struct Search<'a> {
    adjacency: Vec<BitSet>,
    weights: Vec<f64>,
    best_weight: f64,
    best: Vec<usize>,
    current: Vec<usize>,
    visited: u64,
    clock: &'a dyn Clock,
    deadline: f64,
    aborted: bool,
}

impl Search<'_> {
    fn expand(&mut self, mut candidates: BitSet, weight: f64) {
        loop {
            if self.aborted {
                return;
            }
            self.visited += 1;
            if self.visited % 4096 == 0 && self.clock.seconds() > self.deadline {
                self.aborted = true;
                return;
            }
            let Some(v) = candidates.first() else {
                if weight > self.best_weight {
                    self.best_weight = weight;
                    self.best = self.current.clone();
                }
                return;
            };
            if weight + self.clique_cover_bound(&candidates) <= self.best_weight {
                return;
            }
            let mut with_v = candidates.clone();
            with_v.remove(v);
            with_v.subtract(&self.adjacency[v]);
            self.current.push(v);
            self.expand(with_v, weight + self.weights[v]);
            self.current.pop();
            candidates.remove(v);
        }
    }

    /// Sum over a greedy clique partition of each clique's heaviest vertex.
    fn clique_cover_bound(&self, candidates: &BitSet) -> f64 {
        let mut remaining = candidates.clone();
        let mut bound = 0.0;
        while let Some(v) = remaining.first() {
            bound += self.weights[v];
            remaining.remove(v);
            let mut extend = remaining.clone();
            extend.intersect(&self.adjacency[v]);
            while let Some(u) = extend.first() {
                remaining.remove(u);
                extend.remove(u);
                extend.intersect(&self.adjacency[u]);
            }
        }
        bound
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::string::ToString;

    /// The five-operator conflict example: A1 on {q2,q3}, A2 on {q1},
    /// A3 on {q4}, A4 on {q1,q2}, A5 on {q3,q4}.
    pub(crate) fn conflict_example() -> IncompatibilityGraph {
        let labels = (1..=5).map(|i| format!("A{i}")).collect();
        let weights = vec![0.5, 0.01, 0.1, 0.45, 0.45];
        let supports = [0b0110, 0b0001, 0b1000, 0b0011, 0b1100];
        IncompatibilityGraph::from_supports(labels, weights, &supports)
    }

    #[test]
    fn conflict_example_edges() {
        let g = conflict_example();
        assert_eq!(g.edges(), vec![(0, 3), (0, 4), (1, 3), (2, 4)]);
    }

    #[test]
    fn conflict_example_selections() {
        let g = conflict_example();
        let exact = solve_mwis_exact(&g);
        assert_eq!(exact.chosen, vec![3, 4]);
        assert_eq!(exact.total_weight, 0.9);
        let greedy = solve_greedy_tetris(&g);
        assert_eq!(greedy.chosen, vec![0, 1, 2]);
        assert!((greedy.total_weight - 0.61).abs() < 1e-15);
        let single = select_single_adapt(&g);
        assert_eq!(single.chosen, vec![0]);
        assert_eq!(single.total_weight, 0.5);
    }

    #[test]
    fn star_prefers_leaves() {
        let labels = ["c", "l1", "l2", "l3"].iter().map(|s| s.to_string()).collect();
        let g = IncompatibilityGraph::from_edges(
            labels,
            vec![10.0, 4.0, 4.0, 4.0],
            &[(0, 1), (0, 2), (0, 3)],
        );
        let sel = solve_mwis_exact(&g);
        assert_eq!(sel.chosen, vec![1, 2, 3]);
        assert_eq!(sel.total_weight, 12.0);
    }

    #[test]
    fn trivial_graphs() {
        let empty = IncompatibilityGraph::from_edges(vec![], vec![], &[]);
        assert!(solve_mwis_exact(&empty).chosen.is_empty());
        assert!(select_single_adapt(&empty).chosen.is_empty());
        let one = IncompatibilityGraph::from_edges(vec!["a".into()], vec![0.3], &[]);
        assert_eq!(solve_mwis_exact(&one).chosen, vec![0]);
        let labels: Vec<String> = (0..4).map(|i| format!("n{i}")).collect();
        let w = vec![1.0, 3.0, 2.0, 0.5];
        let clique: Vec<(usize, usize)> =
            (0..4).flat_map(|u| (u + 1..4).map(move |v| (u, v))).collect();
        let g = IncompatibilityGraph::from_edges(labels.clone(), w.clone(), &clique);
        assert_eq!(solve_greedy_tetris(&g).chosen, vec![1]);
        let free = IncompatibilityGraph::from_edges(labels, w, &[]);
        assert_eq!(solve_greedy_tetris(&free).chosen, vec![0, 1, 2, 3]);
    }

    #[test]
    fn ties_follow_label_order() {
        let labels = ["Y1", "X2", "X1"].iter().map(|s| s.to_string()).collect();
        let g = IncompatibilityGraph::from_edges(labels, vec![1.0, 1.0, 1.0], &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(select_single_adapt(&g).chosen, vec![2]);
        assert_eq!(solve_greedy_tetris(&g).chosen, vec![2]);
    }

    struct Expired;
    impl Clock for Expired {
        fn seconds(&self) -> f64 {
            use core::sync::atomic::{AtomicU64, Ordering};
            static CALLS: AtomicU64 = AtomicU64::new(0);
            CALLS.fetch_add(1, Ordering::Relaxed) as f64 * 1000.0
        }
    }

    #[test]
    fn budget_falls_back_to_greedy() {
        // Large enough to need more than 4096 search nodes.
        let n = 120;
        let labels: Vec<String> = (0..n).map(|i| format!("v{i:03}")).collect();
        let weights: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 37) % 11) as f64 / 10.0).collect();
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|(u, v)| (u * 7 + v * 13) % 5 == 0)
            .collect();
        let g = IncompatibilityGraph::from_edges(labels, weights, &edges);
        let sel = solve_mwis_exact_within(&g, &Expired, 1.0);
        if !sel.exact {
            assert_eq!(sel.chosen, solve_greedy_tetris(&g).chosen);
        }
        assert!(g.is_independent(&sel.chosen));
    }
}
