//! Link-prediction evaluation.
//!
//! Edge features are built from node embeddings with the four symmetric
//! operators (average, Hadamard, weighted L1/L2). Candidate pairs come from
//! an edge-removal experiment: removed edges become test positives, surviving
//! edges train positives, and every positive is matched with one sampled
//! non-edge. A small L2-regularized logistic regression scores embedding
//! features; neighborhood heuristics score pairs directly. AUC is the exact
//! Mann-Whitney statistic with ties counted half.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{AttributedGraph, NodeId};
use crate::model::EmbeddingModel;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("edge features need equal dimensions, got {0} and {1}")]
    DimensionMismatch(usize, usize),
    #[error("AUC needs both classes present")]
    SingleClass,
    #[error("no removed edges to build a test set from")]
    NoTestEdges,
    #[error("could not sample a non-edge partner for node `{0}` after {1} tries")]
    NegativeSamplingFailed(String, u32),
    #[error("training set is empty")]
    EmptyTrainingSet,
}

/// Retries per positive pair before negative sampling gives up.
const MAX_NEGATIVE_RETRIES: u32 = 1000;

/// Symmetric operators turning two node embeddings into one edge feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeOperator {
    /// `(x_k + y_k) / 2`
    Average,
    /// `x_k * y_k`
    Hadamard,
    /// `|x_k - y_k|`
    WeightedL1,
    /// `(x_k - y_k)^2`
    WeightedL2,
}

impl EdgeOperator {
    pub const ALL: [EdgeOperator; 4] = [
        EdgeOperator::Average,
        EdgeOperator::Hadamard,
        EdgeOperator::WeightedL1,
        EdgeOperator::WeightedL2,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EdgeOperator::Average => "average",
            EdgeOperator::Hadamard => "hadamard",
            EdgeOperator::WeightedL1 => "l1",
            EdgeOperator::WeightedL2 => "l2",
        }
    }
}

impl std::str::FromStr for EdgeOperator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "average" => Ok(EdgeOperator::Average),
            "hadamard" => Ok(EdgeOperator::Hadamard),
            "l1" | "weighted_l1" => Ok(EdgeOperator::WeightedL1),
            "l2" | "weighted_l2" => Ok(EdgeOperator::WeightedL2),
            other => Err(format!("unknown edge operator `{other}`")),
        }
    }
}

/// Apply an edge operator to two equal-length embedding vectors.
pub fn edge_feature(op: EdgeOperator, a: &[f64], b: &[f64]) -> Result<Vec<f64>, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::DimensionMismatch(a.len(), b.len()));
    }
    let feature = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| match op {
            EdgeOperator::Average => (x + y) / 2.0,
            EdgeOperator::Hadamard => x * y,
            EdgeOperator::WeightedL1 => (x - y).abs(),
            EdgeOperator::WeightedL2 => (x - y) * (x - y),
        })
        .collect();
    Ok(feature)
}

/// Neighborhood-based link scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeuristicKind {
    CommonNeighbors,
    Jaccard,
    AdamicAdar,
    PreferentialAttachment,
}

impl HeuristicKind {
    pub const ALL: [HeuristicKind; 4] = [
        HeuristicKind::CommonNeighbors,
        HeuristicKind::Jaccard,
        HeuristicKind::AdamicAdar,
        HeuristicKind::PreferentialAttachment,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            HeuristicKind::CommonNeighbors => "common_neighbors",
            HeuristicKind::Jaccard => "jaccard",
            HeuristicKind::AdamicAdar => "adamic_adar",
            HeuristicKind::PreferentialAttachment => "preferential_attachment",
        }
    }
}

impl std::str::FromStr for HeuristicKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "common_neighbors" => Ok(HeuristicKind::CommonNeighbors),
            "jaccard" => Ok(HeuristicKind::Jaccard),
            "adamic_adar" => Ok(HeuristicKind::AdamicAdar),
            "preferential_attachment" => Ok(HeuristicKind::PreferentialAttachment),
            other => Err(format!("unknown heuristic `{other}`")),
        }
    }
}

/// Score a candidate pair by a neighborhood heuristic.
///
/// Common neighbors, Jaccard (0 when both neighborhoods are empty),
/// Adamic-Adar with `1/log degree` terms — shared neighbors of degree <= 1
/// are skipped since their log vanishes — and preferential attachment.
pub fn heuristic_score(graph: &AttributedGraph, a: NodeId, b: NodeId, kind: HeuristicKind) -> f64 {
    let na = graph.neighbors(a);
    let nb = graph.neighbors(b);
    match kind {
        HeuristicKind::PreferentialAttachment => (na.len() * nb.len()) as f64,
        _ => {
            // Sorted-merge intersection.
            let mut common: Vec<NodeId> = Vec::new();
            let (mut i, mut j) = (0, 0);
            while i < na.len() && j < nb.len() {
                match na[i].0.cmp(&nb[j].0) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        common.push(na[i].0);
                        i += 1;
                        j += 1;
                    }
                }
            }
            match kind {
                HeuristicKind::CommonNeighbors => common.len() as f64,
                HeuristicKind::Jaccard => {
                    let union = na.len() + nb.len() - common.len();
                    if union == 0 {
                        0.0
                    } else {
                        common.len() as f64 / union as f64
                    }
                }
                HeuristicKind::AdamicAdar => common
                    .iter()
                    .map(|&k| graph.degree(k))
                    .filter(|&d| d > 1)
                    .map(|d| 1.0 / (d as f64).ln())
                    .sum(),
                HeuristicKind::PreferentialAttachment => unreachable!(),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetTag {
    Train,
    Test,
}

/// A balanced set of labeled node pairs: each positive is matched with one
/// sampled negative.
#[derive(Debug, Clone)]
pub struct PairDataset {
    positives: Vec<(NodeId, NodeId)>,
    negatives: Vec<(NodeId, NodeId)>,
    tag: DatasetTag,
}

impl PairDataset {
    pub fn new(
        positives: Vec<(NodeId, NodeId)>,
        negatives: Vec<(NodeId, NodeId)>,
        tag: DatasetTag,
    ) -> Self {
        assert_eq!(positives.len(), negatives.len(), "dataset must be balanced");
        Self {
            positives,
            negatives,
            tag,
        }
    }

    pub fn tag(&self) -> DatasetTag {
        self.tag
    }

    /// Total labeled pairs (positives plus negatives).
    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positives.is_empty()
    }

    pub fn positives(&self) -> &[(NodeId, NodeId)] {
        &self.positives
    }

    pub fn negatives(&self) -> &[(NodeId, NodeId)] {
        &self.negatives
    }

    /// All pairs with their labels, positives first.
    pub fn iter(&self) -> impl Iterator<Item = (NodeId, NodeId, bool)> + '_ {
        self.positives
            .iter()
            .map(|&(a, b)| (a, b, true))
            .chain(self.negatives.iter().map(|&(a, b)| (a, b, false)))
    }

    /// Keep a uniformly chosen fraction of the matched positive/negative
    /// couples, preserving balance.
    pub fn subsample(&self, fraction: f64, seed: u64) -> PairDataset {
        assert!((0.0..=1.0).contains(&fraction));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let keep = ((fraction * self.positives.len() as f64 + 0.5).floor() as usize)
            .min(self.positives.len());
        let mut indices: Vec<usize> = (0..self.positives.len()).collect();
        for i in 0..keep {
            let j = rng.random_range(i..indices.len());
            indices.swap(i, j);
        }
        indices.truncate(keep);
        indices.sort_unstable();
        PairDataset {
            positives: indices.iter().map(|&i| self.positives[i]).collect(),
            negatives: indices.iter().map(|&i| self.negatives[i]).collect(),
            tag: self.tag,
        }
    }
}

/// Build train/test pair datasets from an edge-removal experiment.
///
/// Test positives are the removed edges; each gets a negative `(i, k)` that
/// is not an edge of the *full* graph. Train positives are the surviving
/// edges; each gets a negative that is not an edge of the *remaining* graph.
pub fn build_pair_datasets(
    full: &AttributedGraph,
    remaining: &AttributedGraph,
    removed: &[(NodeId, NodeId)],
    seed: u64,
) -> Result<(PairDataset, PairDataset), EvalError> {
    if removed.is_empty() {
        return Err(EvalError::NoTestEdges);
    }
    let n = full.node_count() as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut sample_negative =
        |anchor: NodeId, graph: &AttributedGraph| -> Result<(NodeId, NodeId), EvalError> {
            for _ in 0..MAX_NEGATIVE_RETRIES {
                let k = rng.random_range(0..n);
                if k != anchor && !graph.has_edge(anchor, k) {
                    return Ok((anchor, k));
                }
            }
            Err(EvalError::NegativeSamplingFailed(
                full.node_name(anchor).to_owned(),
                MAX_NEGATIVE_RETRIES,
            ))
        };

    let mut test_negatives = Vec::with_capacity(removed.len());
    for &(i, _) in removed {
        test_negatives.push(sample_negative(i, full)?);
    }
    let test = PairDataset::new(removed.to_vec(), test_negatives, DatasetTag::Test);

    let train_positives: Vec<(NodeId, NodeId)> = remaining
        .edge_list()
        .into_iter()
        .map(|(a, b, _)| (a, b))
        .collect();
    let mut train_negatives = Vec::with_capacity(train_positives.len());
    for &(i, _) in &train_positives {
        train_negatives.push(sample_negative(i, remaining)?);
    }
    let train = PairDataset::new(train_positives, train_negatives, DatasetTag::Train);

    Ok((train, test))
}

/// Hyperparameters for the link classifier. Training is full-batch and
/// deterministic: zero initialization, fixed epochs, mean logistic loss with
/// L2 regularization on standardized features.
#[derive(Debug, Clone)]
pub struct LinkClassifierConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for LinkClassifierConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            learning_rate: 0.5,
            l2: 1e-4,
        }
    }
}

/// L2-regularized logistic regression over edge features.
#[derive(Debug, Clone)]
pub struct LinkClassifier {
    weights: Vec<f64>,
    bias: f64,
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl LinkClassifier {
    /// Decision value (distance from the separating hyperplane, in
    /// standardized feature space) for a raw edge feature.
    pub fn decision(&self, feature: &[f64]) -> f64 {
        let mut z = self.bias;
        for (d, &x) in feature.iter().enumerate() {
            z += self.weights[d] * (x - self.mean[d]) / self.std[d];
        }
        z
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Train the link classifier on a balanced pair dataset.
pub fn train_link_classifier(
    train: &PairDataset,
    model: &EmbeddingModel,
    op: EdgeOperator,
    config: &LinkClassifierConfig,
) -> Result<LinkClassifier, EvalError> {
    if train.is_empty() {
        return Err(EvalError::EmptyTrainingSet);
    }
    let mut features = Vec::with_capacity(train.len());
    let mut labels = Vec::with_capacity(train.len());
    for (a, b, positive) in train.iter() {
        features.push(edge_feature(op, model.embedding(a), model.embedding(b))?);
        labels.push(positive);
    }
    train_logistic(&features, &labels, config)
}

/// Logistic regression on raw feature rows (standardized internally).
pub fn train_logistic(
    features: &[Vec<f64>],
    labels: &[bool],
    config: &LinkClassifierConfig,
) -> Result<LinkClassifier, EvalError> {
    if features.is_empty() {
        return Err(EvalError::EmptyTrainingSet);
    }
    let dim = features[0].len();
    let n = features.len() as f64;

    let mut mean = vec![0.0; dim];
    for row in features {
        for (d, &x) in row.iter().enumerate() {
            mean[d] += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut std = vec![0.0; dim];
    for row in features {
        for (d, &x) in row.iter().enumerate() {
            std[d] += (x - mean[d]) * (x - mean[d]);
        }
    }
    for s in &mut std {
        *s = (*s / n).sqrt();
        if *s < 1e-12 {
            *s = 1.0;
        }
    }
    if features.iter().all(|row| row == &features[0]) {
        log::warn!("all edge features are identical; the classifier cannot separate anything");
    }

    let standardized: Vec<Vec<f64>> = features
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(d, &x)| (x - mean[d]) / std[d])
                .collect()
        })
        .collect();

    let mut weights = vec![0.0; dim];
    let mut bias = 0.0;
    let mut grad = vec![0.0; dim];
    for _ in 0..config.epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_bias = 0.0;
        for (row, &label) in standardized.iter().zip(labels) {
            let mut z = bias;
            for (d, &x) in row.iter().enumerate() {
                z += weights[d] * x;
            }
            let residual = sigmoid(z) - f64::from(u8::from(label));
            for (d, &x) in row.iter().enumerate() {
                grad[d] += residual * x;
            }
            grad_bias += residual;
        }
        for d in 0..dim {
            weights[d] -= config.learning_rate * (grad[d] / n + config.l2 * weights[d]);
        }
        bias -= config.learning_rate * grad_bias / n;
    }

    Ok(LinkClassifier {
        weights,
        bias,
        mean,
        std,
    })
}

/// AUC of a trained classifier's decision values on a dataset.
pub fn classifier_auc(
    classifier: &LinkClassifier,
    model: &EmbeddingModel,
    op: EdgeOperator,
    dataset: &PairDataset,
) -> Result<f64, EvalError> {
    let mut scores = Vec::with_capacity(dataset.len());
    let mut labels = Vec::with_capacity(dataset.len());
    for (a, b, positive) in dataset.iter() {
        let feature = edge_feature(op, model.embedding(a), model.embedding(b))?;
        scores.push(classifier.decision(&feature));
        labels.push(positive);
    }
    auc(&scores, &labels)
}

/// AUC of a neighborhood heuristic on a dataset, scored against `graph`.
pub fn heuristic_auc(
    graph: &AttributedGraph,
    kind: HeuristicKind,
    dataset: &PairDataset,
) -> Result<f64, EvalError> {
    let mut scores = Vec::with_capacity(dataset.len());
    let mut labels = Vec::with_capacity(dataset.len());
    for (a, b, positive) in dataset.iter() {
        scores.push(heuristic_score(graph, a, b, kind));
        labels.push(positive);
    }
    auc(&scores, &labels)
}

/// Exact Mann-Whitney AUC: the probability that a random positive outscores
/// a random negative, ties counted half. Computed by rank sums with averaged
/// tie ranks.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    assert_eq!(scores.len(), labels.len());
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j, averaged over the tie group.
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }

    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}
