//! Corruption generators for missing-data experiments.
//!
//! Five regimes: clearing the attribute rows of random or structurally
//! important (high-degree) nodes, clearing random or label-informative
//! attribute columns, and removing random edges. Each op is a pure function
//! from graph to graph and leaves everything it does not target bit-for-bit
//! intact, so corrupted inputs stay comparable across runs.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{AttrId, AttributedGraph, LabelAssignment, NodeId};

#[derive(Debug, Error)]
pub enum CorruptionError {
    #[error("corruption fraction must be in [0, 1], got {0}")]
    BadFraction(f64),
    #[error("column-importance corruption requires at least 2 label classes, got {0}")]
    NotEnoughClasses(usize),
    #[error("corruption kind `{0}` requires labels")]
    LabelsRequired(String),
}

/// The five missing-data regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[clap(rename_all = "snake_case")]
pub enum CorruptionKind {
    /// Clear all attributes of randomly chosen nodes.
    RowRandom,
    /// Clear all attributes of the highest-degree nodes.
    RowImportant,
    /// Clear randomly chosen attribute columns.
    ColRandom,
    /// Clear the attribute columns most informative about the class label.
    ColImportant,
    /// Remove random edges.
    EdgeRandom,
}

impl CorruptionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CorruptionKind::RowRandom => "row_random",
            CorruptionKind::RowImportant => "row_important",
            CorruptionKind::ColRandom => "col_random",
            CorruptionKind::ColImportant => "col_important",
            CorruptionKind::EdgeRandom => "edge_random",
        }
    }
}

/// A fully specified corruption: kind, fraction of targets, and seed.
#[derive(Debug, Clone, Copy)]
pub struct CorruptionSpec {
    pub kind: CorruptionKind,
    pub fraction: f64,
    pub seed: u64,
}

impl CorruptionSpec {
    /// Apply the corruption. The removed-edge list is empty for every kind
    /// except [`CorruptionKind::EdgeRandom`].
    pub fn apply(
        &self,
        graph: &AttributedGraph,
        labels: Option<&LabelAssignment>,
    ) -> Result<(AttributedGraph, Vec<(NodeId, NodeId)>), CorruptionError> {
        if !(0.0..=1.0).contains(&self.fraction) {
            return Err(CorruptionError::BadFraction(self.fraction));
        }
        match self.kind {
            CorruptionKind::RowRandom => {
                Ok((drop_rows_random(graph, self.fraction, self.seed), Vec::new()))
            }
            CorruptionKind::RowImportant => {
                Ok((drop_rows_important(graph, self.fraction), Vec::new()))
            }
            CorruptionKind::ColRandom => {
                Ok((drop_cols_random(graph, self.fraction, self.seed), Vec::new()))
            }
            CorruptionKind::ColImportant => {
                let labels = labels.ok_or_else(|| {
                    CorruptionError::LabelsRequired(self.kind.as_str().to_owned())
                })?;
                Ok((drop_cols_important(graph, labels, self.fraction)?, Vec::new()))
            }
            CorruptionKind::EdgeRandom => {
                let (g, removed) = remove_edges_random(graph, self.fraction, self.seed);
                Ok((g, removed))
            }
        }
    }
}

/// Round half up, the documented rule for `fraction * count`.
fn round_half_up(fraction: f64, count: usize) -> usize {
    ((fraction * count as f64 + 0.5).floor() as usize).min(count)
}

/// First `k` positions of a seeded uniform shuffle (partial Fisher-Yates).
fn choose(count: usize, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..count).collect();
    for i in 0..k.min(count) {
        let j = rng.random_range(i..count);
        indices.swap(i, j);
    }
    indices.truncate(k);
    indices
}

/// Clear the attribute rows of `round(fraction * |V|)` uniformly chosen
/// nodes. Edges are untouched.
pub fn drop_rows_random(graph: &AttributedGraph, fraction: f64, seed: u64) -> AttributedGraph {
    assert!((0.0..=1.0).contains(&fraction));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = round_half_up(fraction, graph.node_count());
    let rows = choose(graph.node_count(), k, &mut rng);
    clear_rows(graph, &rows)
}

/// Clear the attribute rows of the top `round(fraction * |V|)` nodes by
/// weighted degree, ties broken by ascending node id.
pub fn drop_rows_important(graph: &AttributedGraph, fraction: f64) -> AttributedGraph {
    assert!((0.0..=1.0).contains(&fraction));
    let mut ranked: Vec<NodeId> = (0..graph.node_count() as NodeId).collect();
    ranked.sort_by(|&a, &b| {
        graph
            .weighted_degree(b)
            .partial_cmp(&graph.weighted_degree(a))
            .unwrap()
            .then(a.cmp(&b))
    });
    let k = round_half_up(fraction, graph.node_count());
    let rows: Vec<usize> = ranked[..k].iter().map(|&v| v as usize).collect();
    clear_rows(graph, &rows)
}

fn clear_rows(graph: &AttributedGraph, rows: &[usize]) -> AttributedGraph {
    let (adjacency, mut attrs, node_vocab, attr_vocab) = graph.clone().into_parts();
    for &row in rows {
        attrs[row].clear();
    }
    AttributedGraph::from_parts(adjacency, attrs, node_vocab, attr_vocab)
}

/// Clear `round(fraction * |A|)` uniformly chosen attribute columns.
pub fn drop_cols_random(graph: &AttributedGraph, fraction: f64, seed: u64) -> AttributedGraph {
    assert!((0.0..=1.0).contains(&fraction));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = round_half_up(fraction, graph.attr_count());
    let cols = choose(graph.attr_count(), k, &mut rng);
    clear_cols(graph, &cols)
}

/// Clear the `round(fraction * |A|)` attribute columns with the highest
/// mutual information between column presence and the class label,
/// ties broken by ascending attribute id.
pub fn drop_cols_important(
    graph: &AttributedGraph,
    labels: &LabelAssignment,
    fraction: f64,
) -> Result<AttributedGraph, CorruptionError> {
    assert!((0.0..=1.0).contains(&fraction));
    if labels.num_classes() < 2 {
        return Err(CorruptionError::NotEnoughClasses(labels.num_classes()));
    }
    let mut ranked: Vec<(AttrId, f64)> = (0..graph.attr_count() as AttrId)
        .map(|attr| (attr, column_label_mi(graph, labels, attr)))
        .collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let k = round_half_up(fraction, graph.attr_count());
    let cols: Vec<usize> = ranked[..k].iter().map(|&(a, _)| a as usize).collect();
    Ok(clear_cols(graph, &cols))
}

fn clear_cols(graph: &AttributedGraph, cols: &[usize]) -> AttributedGraph {
    let mut dropped = vec![false; graph.attr_count()];
    for &col in cols {
        dropped[col] = true;
    }
    let (adjacency, mut attrs, node_vocab, attr_vocab) = graph.clone().into_parts();
    for entries in &mut attrs {
        entries.retain(|&(attr, _)| !dropped[attr as usize]);
    }
    AttributedGraph::from_parts(adjacency, attrs, node_vocab, attr_vocab)
}

/// Plug-in mutual information (natural log) between binarized column
/// presence and the class label, over labeled nodes only.
///
/// Presence means an observed, strictly positive value; observed zeros and
/// unobserved entries both count as absent. Computed from integer counts so
/// exactly independent contingency tables yield exactly zero.
pub fn column_label_mi(graph: &AttributedGraph, labels: &LabelAssignment, attr: AttrId) -> f64 {
    let classes = labels.num_classes();
    let mut present = vec![0u64; classes];
    let mut class_total = vec![0u64; classes];
    let mut n = 0u64;
    for node in 0..graph.node_count() as NodeId {
        let Some(class) = labels.label(node) else {
            continue;
        };
        n += 1;
        class_total[class as usize] += 1;
        if graph.attr_value(node, attr).is_some_and(|v| v > 0.0) {
            present[class as usize] += 1;
        }
    }
    if n == 0 {
        return 0.0;
    }

    let present_total: u64 = present.iter().sum();
    let x_total = [n - present_total, present_total];
    let mut mi = 0.0;
    for (class, &ct) in class_total.iter().enumerate() {
        let cells = [ct - present[class], present[class]];
        for (x, &c_xy) in cells.iter().enumerate() {
            if c_xy == 0 || x_total[x] == 0 {
                continue;
            }
            let p_xy = c_xy as f64 / n as f64;
            // n * c_xy and c_x * c_y are exact integers in f64 range here.
            let ratio = (n as f64 * c_xy as f64) / (x_total[x] as f64 * ct as f64);
            mi += p_xy * ratio.ln();
        }
    }
    mi.max(0.0)
}

/// Remove `round(fraction * |E|)` uniformly chosen undirected edges and
/// return the corrupted graph plus the removed edges (as `(a, b)` with
/// `a < b`, sorted). Attributes are untouched.
pub fn remove_edges_random(
    graph: &AttributedGraph,
    fraction: f64,
    seed: u64,
) -> (AttributedGraph, Vec<(NodeId, NodeId)>) {
    assert!((0.0..=1.0).contains(&fraction));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = graph.edge_list();
    let k = round_half_up(fraction, edges.len());
    let mut removed: Vec<(NodeId, NodeId)> = choose(edges.len(), k, &mut rng)
        .into_iter()
        .map(|idx| (edges[idx].0, edges[idx].1))
        .collect();
    removed.sort_unstable();

    let (mut adjacency, attrs, node_vocab, attr_vocab) = graph.clone().into_parts();
    for &(a, b) in &removed {
        for (from, to) in [(a, b), (b, a)] {
            let nbrs = &mut adjacency[from as usize];
            if let Ok(pos) = nbrs.binary_search_by_key(&to, |&(id, _)| id) {
                nbrs.remove(pos);
            }
        }
    }
    (
        AttributedGraph::from_parts(adjacency, attrs, node_vocab, attr_vocab),
        removed,
    )
}
