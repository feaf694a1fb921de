//! Attributed-graph data model and text-file ingestion.
//!
//! Graphs are undirected and immutable once built, so they can be shared
//! freely across threads. Node and attribute names are interned into dense
//! 0-based ids, which lets parameter matrices live in flat arrays indexed by
//! id. Attribute storage is sparse with explicit observation semantics: a
//! stored `(attr, value)` pair means the value is observed (mask 1), even
//! when the value is zero; an absent pair means the value is unobserved
//! (mask 0).

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

/// Dense internal node id.
pub type NodeId = u32;
/// Dense internal attribute id.
pub type AttrId = u32;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {msg}")]
    Invalid { line: usize, msg: String },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate label for node `{0}`")]
    DuplicateLabel(String),
}

/// Bidirectional map between external string names and dense internal ids.
///
/// Ids are assigned in first-seen order, so ingestion is reproducible from
/// the input file alone.
#[derive(Debug, Clone, Default)]
pub struct Vocab {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Vocab {
    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.ids.insert(name.to_owned(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Undirected graph with sparse, partially observed node attributes.
#[derive(Debug, Clone)]
pub struct AttributedGraph {
    /// Per node: neighbors as `(id, weight)`, sorted by id. Symmetric.
    adjacency: Vec<Vec<(NodeId, f64)>>,
    /// Per node: observed attribute entries `(id, value)`, sorted by id.
    attrs: Vec<Vec<(AttrId, f64)>>,
    node_vocab: Vocab,
    attr_vocab: Vocab,
}

/// Strip a trailing `#` comment and surrounding whitespace.
fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => line[..pos].trim(),
        None => line.trim(),
    }
}

impl AttributedGraph {
    /// Load an edge list from a file. See [`AttributedGraph::from_edges_text`].
    pub fn load_edges(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_edges_text(&text)
    }

    /// Parse an edge list: one `src dst [weight]` per line, `#` comments,
    /// arbitrary whitespace separators.
    ///
    /// The graph is undirected; duplicate edges (in either direction) are
    /// collapsed by summing their weights, and self-loops are dropped. The
    /// node vocabulary is built in first-seen order. Omitted weights default
    /// to 1.
    pub fn from_edges_text(text: &str) -> Result<Self, GraphError> {
        let mut node_vocab = Vocab::default();
        let mut weights: HashMap<(NodeId, NodeId), f64> = HashMap::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = strip_comment(raw);
            if content.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = content.split_whitespace().collect();
            if tokens.len() < 2 || tokens.len() > 3 {
                return Err(GraphError::Parse {
                    line,
                    msg: format!("expected `src dst [weight]`, got {} tokens", tokens.len()),
                });
            }
            let weight = if tokens.len() == 3 {
                tokens[2].parse::<f64>().map_err(|_| GraphError::Parse {
                    line,
                    msg: format!("bad edge weight `{}`", tokens[2]),
                })?
            } else {
                1.0
            };
            if !weight.is_finite() || weight <= 0.0 {
                return Err(GraphError::Invalid {
                    line,
                    msg: format!("edge weight must be positive, got {weight}"),
                });
            }
            let a = node_vocab.intern(tokens[0]);
            let b = node_vocab.intern(tokens[1]);
            if a == b {
                continue; // self-loop
            }
            let key = (a.min(b), a.max(b));
            *weights.entry(key).or_insert(0.0) += weight;
        }

        let n = node_vocab.len();
        let mut adjacency = vec![Vec::new(); n];
        for (&(a, b), &w) in &weights {
            adjacency[a as usize].push((b, w));
            adjacency[b as usize].push((a, w));
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable_by_key(|&(id, _)| id);
        }

        Ok(Self {
            adjacency,
            attrs: vec![Vec::new(); n],
            node_vocab,
            attr_vocab: Vocab::default(),
        })
    }

    /// Load node attributes from a file. See [`AttributedGraph::with_attrs_text`].
    pub fn load_attrs(self, path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.with_attrs_text(&text)
    }

    /// Parse attribute entries: one `node attr value` per line.
    ///
    /// Every listed entry is recorded as observed, including explicit zeros.
    /// Nodes must already exist in the graph; the attribute vocabulary grows
    /// in first-seen order. A repeated `(node, attr)` pair keeps the later
    /// value and logs a warning.
    pub fn with_attrs_text(mut self, text: &str) -> Result<Self, GraphError> {
        let mut values: HashMap<(NodeId, AttrId), f64> = HashMap::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = strip_comment(raw);
            if content.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = content.split_whitespace().collect();
            if tokens.len() != 3 {
                return Err(GraphError::Parse {
                    line,
                    msg: format!("expected `node attr value`, got {} tokens", tokens.len()),
                });
            }
            let node = self
                .node_vocab
                .get(tokens[0])
                .ok_or_else(|| GraphError::UnknownNode(tokens[0].to_owned()))?;
            let value = tokens[2].parse::<f64>().map_err(|_| GraphError::Parse {
                line,
                msg: format!("bad attribute value `{}`", tokens[2]),
            })?;
            if !value.is_finite() || value < 0.0 {
                return Err(GraphError::Invalid {
                    line,
                    msg: format!("attribute value must be nonnegative, got {value}"),
                });
            }
            let attr = self.attr_vocab.intern(tokens[1]);
            if values.insert((node, attr), value).is_some() {
                log::warn!(
                    "line {line}: duplicate attribute entry ({} {}), keeping the later value",
                    tokens[0],
                    tokens[1]
                );
            }
        }

        for nattrs in &mut self.attrs {
            nattrs.clear();
        }
        for (&(node, attr), &value) in &values {
            self.attrs[node as usize].push((attr, value));
        }
        for nattrs in &mut self.attrs {
            nattrs.sort_unstable_by_key(|&(id, _)| id);
        }
        Ok(self)
    }

    /// Construct from pre-validated parts. Internal: corruption ops build
    /// derived graphs without re-serializing.
    pub(crate) fn from_parts(
        adjacency: Vec<Vec<(NodeId, f64)>>,
        attrs: Vec<Vec<(AttrId, f64)>>,
        node_vocab: Vocab,
        attr_vocab: Vocab,
    ) -> Self {
        debug_assert_eq!(adjacency.len(), node_vocab.len());
        debug_assert_eq!(attrs.len(), node_vocab.len());
        Self {
            adjacency,
            attrs,
            node_vocab,
            attr_vocab,
        }
    }

    pub(crate) fn into_parts(
        self,
    ) -> (
        Vec<Vec<(NodeId, f64)>>,
        Vec<Vec<(AttrId, f64)>>,
        Vocab,
        Vocab,
    ) {
        (self.adjacency, self.attrs, self.node_vocab, self.attr_vocab)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn attr_count(&self) -> usize {
        self.attr_vocab.len()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, node: NodeId) -> &[(NodeId, f64)] {
        &self.adjacency[node as usize]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node as usize].len()
    }

    pub fn weighted_degree(&self, node: NodeId) -> f64 {
        self.adjacency[node as usize].iter().map(|&(_, w)| w).sum()
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency[a as usize]
            .binary_search_by_key(&b, |&(id, _)| id)
            .is_ok()
    }

    /// All undirected edges as `(a, b, weight)` with `a < b`, sorted.
    pub fn edge_list(&self) -> Vec<(NodeId, NodeId, f64)> {
        let mut edges = Vec::with_capacity(self.edge_count());
        for (a, nbrs) in self.adjacency.iter().enumerate() {
            for &(b, w) in nbrs {
                if (a as NodeId) < b {
                    edges.push((a as NodeId, b, w));
                }
            }
        }
        edges
    }

    /// Observed attribute entries of a node, sorted by attribute id.
    pub fn attrs(&self, node: NodeId) -> &[(AttrId, f64)] {
        &self.attrs[node as usize]
    }

    /// Observation mask: 1 iff `(node, attr)` carries an observed value.
    pub fn observed(&self, node: NodeId, attr: AttrId) -> bool {
        self.attrs[node as usize]
            .binary_search_by_key(&attr, |&(id, _)| id)
            .is_ok()
    }

    pub fn attr_value(&self, node: NodeId, attr: AttrId) -> Option<f64> {
        self.attrs[node as usize]
            .binary_search_by_key(&attr, |&(id, _)| id)
            .ok()
            .map(|pos| self.attrs[node as usize][pos].1)
    }

    /// Total observed attribute mass: the sum of all observed values.
    pub fn attr_mass(&self) -> f64 {
        self.attrs
            .iter()
            .flat_map(|entries| entries.iter().map(|&(_, v)| v))
            .sum()
    }

    /// Per-attribute observed mass (column sums of the observed matrix).
    pub fn attr_col_mass(&self) -> Vec<f64> {
        let mut mass = vec![0.0; self.attr_count()];
        for entries in &self.attrs {
            for &(attr, value) in entries {
                mass[attr as usize] += value;
            }
        }
        mass
    }

    pub fn node_name(&self, node: NodeId) -> &str {
        self.node_vocab.name(node)
    }

    pub fn attr_name(&self, attr: AttrId) -> &str {
        self.attr_vocab.name(attr)
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.node_vocab.get(name)
    }

    pub fn attr_id(&self, name: &str) -> Option<AttrId> {
        self.attr_vocab.get(name)
    }

    /// Write the edge list in the ingestion format, each undirected edge
    /// once (`a < b` by internal id), ascending.
    pub fn write_edges(&self, out: &mut impl Write) -> io::Result<()> {
        for (a, nbrs) in self.adjacency.iter().enumerate() {
            for &(b, w) in nbrs {
                if (a as NodeId) < b {
                    writeln!(
                        out,
                        "{} {} {}",
                        self.node_vocab.name(a as u32),
                        self.node_vocab.name(b),
                        w
                    )?;
                }
            }
        }
        Ok(())
    }

    /// Write observed attribute entries in the ingestion format, ascending
    /// by `(node, attr)` internal id.
    pub fn write_attrs(&self, out: &mut impl Write) -> io::Result<()> {
        for (node, entries) in self.attrs.iter().enumerate() {
            for &(attr, value) in entries {
                writeln!(
                    out,
                    "{} {} {}",
                    self.node_vocab.name(node as u32),
                    self.attr_vocab.name(attr),
                    value
                )?;
            }
        }
        Ok(())
    }
}

/// Optional per-node class labels, used by importance-based corruption.
#[derive(Debug, Clone)]
pub struct LabelAssignment {
    labels: Vec<Option<u32>>,
    classes: Vocab,
}

impl LabelAssignment {
    /// Load `node label` lines from a file.
    pub fn load(graph: &AttributedGraph, path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_text(graph, &text)
    }

    /// Parse `node label` lines. Nodes absent from the file stay unlabeled;
    /// a node listed twice is an error. Class ids are contiguous from 0 in
    /// first-seen order.
    pub fn from_text(graph: &AttributedGraph, text: &str) -> Result<Self, GraphError> {
        let mut labels = vec![None; graph.node_count()];
        let mut classes = Vocab::default();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = strip_comment(raw);
            if content.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = content.split_whitespace().collect();
            if tokens.len() != 2 {
                return Err(GraphError::Parse {
                    line,
                    msg: format!("expected `node label`, got {} tokens", tokens.len()),
                });
            }
            let node = graph
                .node_id(tokens[0])
                .ok_or_else(|| GraphError::UnknownNode(tokens[0].to_owned()))?;
            let class = classes.intern(tokens[1]);
            let slot = &mut labels[node as usize];
            if slot.is_some() {
                return Err(GraphError::DuplicateLabel(tokens[0].to_owned()));
            }
            *slot = Some(class);
        }
        Ok(Self { labels, classes })
    }

    pub fn label(&self, node: NodeId) -> Option<u32> {
        self.labels[node as usize]
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_name(&self, class: u32) -> &str {
        self.classes.name(class)
    }

    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }
}
