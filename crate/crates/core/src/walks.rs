//! Random-walk corpus generation and context-pair counting.
//!
//! Walks are generated eagerly and reduced once into sparse co-occurrence
//! counts: `n(i, j)` is the number of times node `j` appears within the
//! window of node `i` across the whole corpus. The counts drive both the
//! training-pair distribution and the structure negative-sampling
//! distribution, so materializing them up front costs nothing extra.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{AttributedGraph, NodeId};

/// Sparse co-occurrence counts over ordered (center, context) node pairs.
///
/// Window co-occurrence is mutual, so the map is symmetric; the diagonal is
/// never present because a position is not its own context and same-node
/// pairs from walk revisits are skipped.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContextPairCounts {
    entries: HashMap<(NodeId, NodeId), u64>,
    total: u64,
}

impl ContextPairCounts {
    pub fn count(&self, center: NodeId, context: NodeId) -> u64 {
        self.entries.get(&(center, context)).copied().unwrap_or(0)
    }

    /// Sum of all counts.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries sorted by (center, context); the canonical iteration order
    /// for anything that must be deterministic.
    pub fn sorted_entries(&self) -> Vec<((NodeId, NodeId), u64)> {
        let mut entries: Vec<_> = self.entries.iter().map(|(&k, &v)| (k, v)).collect();
        entries.sort_unstable_by_key(|&(k, _)| k);
        entries
    }

    /// Per-node context mass: `row_mass[i] = sum_j n(i, j)`.
    pub fn row_mass(&self, node_count: usize) -> Vec<f64> {
        let mut mass = vec![0.0; node_count];
        for (&(center, _), &count) in &self.entries {
            mass[center as usize] += count as f64;
        }
        mass
    }

    #[cfg(test)]
    pub(crate) fn from_map(entries: HashMap<(NodeId, NodeId), u64>) -> Self {
        let total = entries.values().sum();
        Self { entries, total }
    }
}

/// Generate `walks_per_node` truncated random walks of `walk_len` nodes from
/// every node.
///
/// Start nodes are visited in ascending id order within each pass, so the
/// corpus is a deterministic function of the graph and the seed. Each step
/// moves to a neighbor with probability proportional to edge weight (exact
/// cumulative-weight inversion); a walk that reaches a node with no
/// neighbors ends early, so isolated nodes yield single-node walks.
pub fn generate_walks(
    graph: &AttributedGraph,
    walk_len: usize,
    walks_per_node: usize,
    seed: u64,
) -> Vec<Vec<NodeId>> {
    assert!(walk_len >= 1, "walk_len must be >= 1");
    assert!(walks_per_node >= 1, "walks_per_node must be >= 1");

    let n = graph.node_count();
    // Per-node cumulative weights for O(log deg) weighted steps.
    let cumulative: Vec<Vec<f64>> = (0..n as NodeId)
        .map(|v| {
            let mut acc = 0.0;
            graph
                .neighbors(v)
                .iter()
                .map(|&(_, w)| {
                    acc += w;
                    acc
                })
                .collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut walks = Vec::with_capacity(n * walks_per_node);
    for _pass in 0..walks_per_node {
        for start in 0..n as NodeId {
            let mut walk = Vec::with_capacity(walk_len);
            walk.push(start);
            let mut current = start;
            while walk.len() < walk_len {
                let nbrs = graph.neighbors(current);
                if nbrs.is_empty() {
                    break;
                }
                let cum = &cumulative[current as usize];
                let total = *cum.last().unwrap();
                let r = rng.random::<f64>() * total;
                let pos = cum.partition_point(|&c| c <= r).min(nbrs.len() - 1);
                current = nbrs[pos].0;
                walk.push(current);
            }
            walks.push(walk);
        }
    }
    walks
}

/// Count window co-occurrences over a walk corpus.
///
/// For each position `i` of each walk, every position `j` with
/// `0 < |i - j| <= window` contributes one count to `(walk[i], walk[j])`,
/// except when both positions hold the same node.
pub fn count_context_pairs(walks: &[Vec<NodeId>], window: usize) -> ContextPairCounts {
    assert!(window >= 1, "window must be >= 1");
    let mut entries: HashMap<(NodeId, NodeId), u64> = HashMap::new();
    let mut total = 0u64;
    for walk in walks {
        for i in 0..walk.len() {
            let lo = i.saturating_sub(window);
            let hi = (i + window).min(walk.len().saturating_sub(1));
            for j in lo..=hi {
                if j == i || walk[i] == walk[j] {
                    continue;
                }
                *entries.entry((walk[i], walk[j])).or_insert(0) += 1;
                total += 1;
            }
        }
    }
    ContextPairCounts { entries, total }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line_graph() -> AttributedGraph {
        AttributedGraph::from_edges_text("a b\n").unwrap()
    }

    #[test]
    fn forced_walk_on_path() {
        let g = line_graph();
        let walks = generate_walks(&g, 2, 1, 0);
        assert_eq!(walks, vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn isolated_node_terminates_early() {
        // c participates in no edges but must exist: give it a self-loop line.
        let g = AttributedGraph::from_edges_text("a b\nc c\n").unwrap();
        let c = g.node_id("c").unwrap();
        let walks = generate_walks(&g, 10, 1, 0);
        assert_eq!(walks[c as usize], vec![c]);
    }

    #[test]
    fn triangle_walks_visit_uniformly() {
        let g = AttributedGraph::from_edges_text("a b\nb c\nc a\n").unwrap();
        let walks = generate_walks(&g, 100, 40, 42);
        let mut visits = [0u64; 3];
        let mut total = 0u64;
        for walk in &walks {
            for &v in walk {
                visits[v as usize] += 1;
                total += 1;
            }
        }
        for &count in &visits {
            let freq = count as f64 / total as f64;
            assert!((freq - 1.0 / 3.0).abs() < 0.01, "freq {freq}");
        }
    }

    #[test]
    fn walk_determinism() {
        let g = AttributedGraph::from_edges_text("a b\nb c\nc a\nc d\n").unwrap();
        let w1 = generate_walks(&g, 20, 5, 7);
        let w2 = generate_walks(&g, 20, 5, 7);
        assert_eq!(w1, w2);
        assert_eq!(
            count_context_pairs(&w1, 4).sorted_entries(),
            count_context_pairs(&w2, 4).sorted_entries()
        );
    }

    #[test]
    fn hand_counted_window() {
        let counts = count_context_pairs(&[vec![0, 1, 2]], 1);
        assert_eq!(counts.count(0, 1), 1);
        assert_eq!(counts.count(1, 0), 1);
        assert_eq!(counts.count(1, 2), 1);
        assert_eq!(counts.count(2, 1), 1);
        assert_eq!(counts.count(0, 2), 0);
        assert_eq!(counts.total(), 4);
    }

    #[test]
    fn distinct_walk_closed_form() {
        for &(len, window) in &[(5usize, 1usize), (8, 3), (20, 5), (6, 5)] {
            let walk: Vec<NodeId> = (0..len as NodeId).collect();
            let counts = count_context_pairs(&[walk], window);
            let (l, t) = (len as u64, window as u64);
            assert_eq!(counts.total(), 2 * t * l - t * (t + 1), "L={len} t={window}");
        }
    }

    #[test]
    fn revisit_pairs_skipped() {
        let counts = count_context_pairs(&[vec![0, 1, 0]], 2);
        assert_eq!(counts.count(0, 1), 2);
        assert_eq!(counts.count(1, 0), 2);
        assert_eq!(counts.count(0, 0), 0);
        assert_eq!(counts.total(), 4);
    }

    /// Independent oracle: full double loop over position pairs.
    fn brute_force_counts(walks: &[Vec<NodeId>], window: usize) -> ContextPairCounts {
        let mut entries: HashMap<(NodeId, NodeId), u64> = HashMap::new();
        for walk in walks {
            for p in 0..walk.len() {
                for q in 0..walk.len() {
                    let gap = p.abs_diff(q);
                    if p != q && gap <= window && walk[p] != walk[q] {
                        *entries.entry((walk[p], walk[q])).or_insert(0) += 1;
                    }
                }
            }
        }
        ContextPairCounts::from_map(entries)
    }

    proptest! {
        #[test]
        fn counting_matches_brute_force(
            walks in prop::collection::vec(
                prop::collection::vec(0u32..8, 1..20), 1..40),
            window in 1usize..5,
        ) {
            let counts = count_context_pairs(&walks, window);
            let oracle = brute_force_counts(&walks, window);
            prop_assert_eq!(counts.sorted_entries(), oracle.sorted_entries());
            prop_assert_eq!(counts.total(), oracle.total());
        }

        #[test]
        fn counts_are_symmetric(
            walks in prop::collection::vec(
                prop::collection::vec(0u32..10, 1..25), 1..30),
            window in 1usize..6,
        ) {
            let counts = count_context_pairs(&walks, window);
            for ((a, b), c) in counts.sorted_entries() {
                prop_assert_eq!(counts.count(b, a), c);
                prop_assert_ne!(a, b);
            }
        }
    }
}
