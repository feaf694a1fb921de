//! Embedding parameters, probability models, objective, and SGD steps.
//!
//! The model is a three-layer linear network collapsed to its weights: an
//! input matrix whose row `i` *is* the embedding of node `i` (the one-hot
//! input layer is realized as a row lookup), plus two output matrices scoring
//! context nodes and attributes. Full-softmax probabilities and the exact
//! objective exist for evaluation and testing; training itself only ever
//! touches the negative-sampling pair losses and their analytic gradients.

use std::io::{self, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{AttrId, AttributedGraph, NodeId};
use crate::walks::ContextPairCounts;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// All training hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Nodes per walk (L).
    pub walk_len: usize,
    /// Walks started from each node (gamma).
    pub walks_per_node: usize,
    /// Context window size (t).
    pub window: usize,
    /// Embedding dimension (d).
    pub dim: usize,
    /// Negative samples per step (K).
    pub negatives: usize,
    /// SGD iterations (I).
    pub max_iters: u64,
    /// Starting learning rate.
    pub lr0: f64,
    /// Iterations between learning-rate updates (staircase decay).
    pub lr_update_period: u64,
    /// Lower clamp on the learning rate.
    pub lr_floor: f64,
    /// Probability that an iteration takes a structure step.
    pub structure_prob: f64,
    pub seed: u64,
    /// Single-threaded, replayable runs. Required for byte-identical output.
    pub deterministic: bool,
    /// Worker threads; more than one switches to lock-free parallel updates.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let lr0 = 0.025;
        Self {
            walk_len: 100,
            walks_per_node: 40,
            window: 10,
            dim: 256,
            negatives: 5,
            max_iters: 100_000_000,
            lr0,
            lr_update_period: 10_000,
            lr_floor: lr0 * 1e-4,
            structure_prob: 0.5,
            seed: 1,
            deterministic: true,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |msg: String| Err(ConfigError::Invalid(msg));
        if self.walk_len < 1 {
            return err("walk_len must be >= 1".into());
        }
        if self.walks_per_node < 1 {
            return err("walks_per_node must be >= 1".into());
        }
        if self.window < 1 {
            return err("window must be >= 1".into());
        }
        if self.dim < 1 {
            return err("dim must be >= 1".into());
        }
        if self.negatives < 1 {
            return err("negatives must be >= 1".into());
        }
        if self.max_iters < 1 {
            return err("max_iters must be >= 1".into());
        }
        if !(self.lr0 > 0.0) {
            return err(format!("lr0 must be positive, got {}", self.lr0));
        }
        if !(0.0..=1.0).contains(&self.structure_prob) {
            return err(format!(
                "structure_prob must be in [0, 1], got {}",
                self.structure_prob
            ));
        }
        if self.threads < 1 {
            return err("threads must be >= 1".into());
        }
        if self.deterministic && self.threads != 1 {
            return err("deterministic mode requires threads = 1".into());
        }
        Ok(())
    }

    /// Learning rate after `elapsed` iterations of this config's schedule.
    pub fn learning_rate(&self, elapsed: u64) -> f64 {
        lr_schedule(
            self.lr0,
            elapsed,
            self.max_iters,
            self.lr_update_period,
            self.lr_floor,
        )
    }
}

/// Staircase linear decay: the rate is recomputed as `lr0 * (1 - tau/I)`
/// only every `period` iterations, and never drops below `floor`.
pub fn lr_schedule(lr0: f64, elapsed: u64, max_iters: u64, period: u64, floor: f64) -> f64 {
    let stepped = if period == 0 {
        elapsed
    } else {
        (elapsed / period) * period
    };
    let eta = lr0 * (1.0 - stepped as f64 / max_iters as f64);
    eta.max(floor)
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Gradients of one negative-sampling pair loss, evaluated at the current
/// parameters. `negatives` is aligned with the negative ids passed in, one
/// gradient per occurrence.
#[derive(Debug, Clone)]
pub struct PairGradients {
    /// d loss / d (input row of the center node)
    pub input: Vec<f64>,
    /// d loss / d (output column of the positive item)
    pub positive: Vec<f64>,
    /// d loss / d (output column of each negative occurrence)
    pub negatives: Vec<Vec<f64>>,
}

/// Reusable buffers for the hot SGD step.
pub(crate) struct StepScratch {
    grad_in: Vec<f64>,
    sigmas: Vec<f64>,
}

impl StepScratch {
    pub(crate) fn new(dim: usize) -> Self {
        Self {
            grad_in: vec![0.0; dim],
            sigmas: Vec::with_capacity(16),
        }
    }
}

/// The learned parameters: input embeddings plus structure/attribute output
/// weights. Row `i` of the input matrix is the embedding of node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    node_count: usize,
    attr_count: usize,
    dim: usize,
    w_in: Vec<f64>,
    w_out_s: Vec<f64>,
    w_out_a: Vec<f64>,
}

impl EmbeddingModel {
    /// Initialize with input rows i.i.d. uniform in (-0.5/d, +0.5/d) and both
    /// output matrices zero, so the initial softmax is exactly uniform.
    pub fn init(node_count: usize, attr_count: usize, dim: usize, seed: u64) -> Self {
        assert!(dim >= 1, "dim must be >= 1");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w_in = vec![0.0; node_count * dim];
        for v in &mut w_in {
            // Reject r == 0 to keep the interval open on both sides.
            let r = loop {
                let r = rng.random::<f64>();
                if r != 0.0 {
                    break r;
                }
            };
            *v = (r - 0.5) / dim as f64;
        }
        Self {
            node_count,
            attr_count,
            dim,
            w_in,
            w_out_s: vec![0.0; node_count * dim],
            w_out_a: vec![0.0; attr_count * dim],
        }
    }

    /// Assemble a model from flat row-major parts (input rows; structure and
    /// attribute output columns stored contiguously per item).
    pub fn from_parts(dim: usize, w_in: Vec<f64>, w_out_s: Vec<f64>, w_out_a: Vec<f64>) -> Self {
        assert!(dim >= 1);
        assert_eq!(w_in.len() % dim, 0);
        assert_eq!(w_in.len(), w_out_s.len());
        assert_eq!(w_out_a.len() % dim, 0);
        let node_count = w_in.len() / dim;
        let attr_count = w_out_a.len() / dim;
        Self {
            node_count,
            attr_count,
            dim,
            w_in,
            w_out_s,
            w_out_a,
        }
    }

    pub(crate) fn into_raw(self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        (self.w_in, self.w_out_s, self.w_out_a)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn attr_count(&self) -> usize {
        self.attr_count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The embedding of a node: row `i` of the input matrix.
    pub fn embedding(&self, node: NodeId) -> &[f64] {
        let start = node as usize * self.dim;
        &self.w_in[start..start + self.dim]
    }

    pub fn embedding_mut(&mut self, node: NodeId) -> &mut [f64] {
        let start = node as usize * self.dim;
        &mut self.w_in[start..start + self.dim]
    }

    /// Output weights scoring node `j` as a context.
    pub fn context_vector(&self, node: NodeId) -> &[f64] {
        let start = node as usize * self.dim;
        &self.w_out_s[start..start + self.dim]
    }

    pub fn context_vector_mut(&mut self, node: NodeId) -> &mut [f64] {
        let start = node as usize * self.dim;
        &mut self.w_out_s[start..start + self.dim]
    }

    /// Output weights scoring attribute `j`.
    pub fn attribute_vector(&self, attr: AttrId) -> &[f64] {
        let start = attr as usize * self.dim;
        &self.w_out_a[start..start + self.dim]
    }

    pub fn attribute_vector_mut(&mut self, attr: AttrId) -> &mut [f64] {
        let start = attr as usize * self.dim;
        &mut self.w_out_a[start..start + self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.w_in.iter().all(|v| v.is_finite())
            && self.w_out_s.iter().all(|v| v.is_finite())
            && self.w_out_a.iter().all(|v| v.is_finite())
    }

    fn softmax_prob(&self, phi: &[f64], matrix: &[f64], items: usize, target: usize) -> f64 {
        let mut logits = vec![0.0; items];
        let mut max = f64::NEG_INFINITY;
        for (k, logit) in logits.iter_mut().enumerate() {
            *logit = dot(phi, &matrix[k * self.dim..(k + 1) * self.dim]);
            max = max.max(*logit);
        }
        let denom: f64 = logits.iter().map(|&z| (z - max).exp()).sum();
        (logits[target] - max).exp() / denom
    }

    /// Full-softmax probability of node `context` given `center`.
    pub fn prob_context(&self, center: NodeId, context: NodeId) -> f64 {
        self.softmax_prob(
            self.embedding(center),
            &self.w_out_s,
            self.node_count,
            context as usize,
        )
    }

    /// Full-softmax probability of attribute `attr` given `center`.
    pub fn prob_attr(&self, center: NodeId, attr: AttrId) -> f64 {
        self.softmax_prob(
            self.embedding(center),
            &self.w_out_a,
            self.attr_count,
            attr as usize,
        )
    }

    /// Negative-sampling loss of one structure pair:
    /// `-log sigma(phi . w_j) - sum_k log sigma(-phi . w_k)`.
    pub fn structure_pair_loss(&self, center: NodeId, context: NodeId, negatives: &[NodeId]) -> f64 {
        let phi = self.embedding(center);
        let mut loss = -log_sigmoid(dot(phi, self.context_vector(context)));
        for &k in negatives {
            loss -= log_sigmoid(-dot(phi, self.context_vector(k)));
        }
        loss
    }

    /// Negative-sampling loss of one attribute pair.
    pub fn attr_pair_loss(&self, center: NodeId, attr: AttrId, negatives: &[AttrId]) -> f64 {
        let phi = self.embedding(center);
        let mut loss = -log_sigmoid(dot(phi, self.attribute_vector(attr)));
        for &k in negatives {
            loss -= log_sigmoid(-dot(phi, self.attribute_vector(k)));
        }
        loss
    }

    /// Analytic gradients of [`Self::structure_pair_loss`] at the current
    /// parameters. `context` must not appear among `negatives`.
    pub fn structure_grads(
        &self,
        center: NodeId,
        context: NodeId,
        negatives: &[NodeId],
    ) -> PairGradients {
        debug_assert!(!negatives.contains(&context));
        grads_impl(
            self.embedding(center),
            &self.w_out_s,
            self.dim,
            context,
            negatives,
        )
    }

    /// Analytic gradients of [`Self::attr_pair_loss`].
    pub fn attr_grads(&self, center: NodeId, attr: AttrId, negatives: &[AttrId]) -> PairGradients {
        debug_assert!(!negatives.contains(&attr));
        grads_impl(
            self.embedding(center),
            &self.w_out_a,
            self.dim,
            attr,
            negatives,
        )
    }

    /// One SGD step on a structure pair: every touched parameter moves by
    /// `-eta` times its gradient, all gradients evaluated before any update.
    pub fn sgd_step_structure(
        &mut self,
        center: NodeId,
        context: NodeId,
        negatives: &[NodeId],
        eta: f64,
    ) {
        let mut scratch = StepScratch::new(self.dim);
        self.sgd_step_structure_scratch(center, context, negatives, eta, &mut scratch);
    }

    /// One SGD step on an attribute pair.
    pub fn sgd_step_attr(&mut self, center: NodeId, attr: AttrId, negatives: &[AttrId], eta: f64) {
        let mut scratch = StepScratch::new(self.dim);
        self.sgd_step_attr_scratch(center, attr, negatives, eta, &mut scratch);
    }

    pub(crate) fn sgd_step_structure_scratch(
        &mut self,
        center: NodeId,
        context: NodeId,
        negatives: &[NodeId],
        eta: f64,
        scratch: &mut StepScratch,
    ) {
        step_kernel(
            &mut self.w_in,
            &mut self.w_out_s,
            self.dim,
            center,
            context,
            negatives,
            eta,
            scratch,
        );
    }

    pub(crate) fn sgd_step_attr_scratch(
        &mut self,
        center: NodeId,
        attr: AttrId,
        negatives: &[AttrId],
        eta: f64,
        scratch: &mut StepScratch,
    ) {
        step_kernel(
            &mut self.w_in,
            &mut self.w_out_a,
            self.dim,
            center,
            attr,
            negatives,
            eta,
            scratch,
        );
    }

    /// The exact full-softmax objective: the context and attribute
    /// cross-entropies, each normalized by its total pair mass.
    ///
    /// Cost is O(|V| (|V| + |A|) d) — an evaluation facility for desk-scale
    /// monitoring, never called by training.
    pub fn exact_objective(
        &self,
        counts: &ContextPairCounts,
        graph: &AttributedGraph,
    ) -> ObjectiveReport {
        assert_eq!(graph.node_count(), self.node_count);
        assert_eq!(graph.attr_count(), self.attr_count);

        let mut logits = vec![0.0; self.node_count.max(self.attr_count)];

        // Structure side, grouped by center so each row's log-sum-exp is
        // computed once.
        let entries = counts.sorted_entries();
        let mut structure_sum = 0.0;
        let mut idx = 0;
        while idx < entries.len() {
            let center = entries[idx].0 .0;
            let phi = self.embedding(center);
            let lse = log_sum_exp_into(phi, &self.w_out_s, self.node_count, self.dim, &mut logits);
            while idx < entries.len() && entries[idx].0 .0 == center {
                let ((_, context), count) = entries[idx];
                structure_sum += count as f64 * (lse - logits[context as usize]);
                idx += 1;
            }
        }

        let mut attr_sum = 0.0;
        let mut attr_mass = 0.0;
        for node in 0..self.node_count as NodeId {
            let observed = graph.attrs(node);
            if observed.iter().all(|&(_, v)| v == 0.0) {
                continue;
            }
            let phi = self.embedding(node);
            let lse = log_sum_exp_into(phi, &self.w_out_a, self.attr_count, self.dim, &mut logits);
            for &(attr, value) in observed {
                if value > 0.0 {
                    attr_sum += value * (lse - logits[attr as usize]);
                    attr_mass += value;
                }
            }
        }

        let alpha1 = if counts.total() > 0 {
            1.0 / counts.total() as f64
        } else {
            0.0
        };
        let alpha2 = if attr_mass > 0.0 { 1.0 / attr_mass } else { 0.0 };
        let structure_term = alpha1 * structure_sum;
        let attribute_term = alpha2 * attr_sum;
        ObjectiveReport {
            structure_term,
            attribute_term,
            alpha1,
            alpha2,
            total: structure_term + attribute_term,
        }
    }

    /// Write embeddings as text: header `|V| d`, then one line per node in
    /// ascending internal-id order with 6-decimal fixed formatting.
    pub fn write_embeddings(
        &self,
        graph: &AttributedGraph,
        out: &mut impl Write,
    ) -> io::Result<()> {
        writeln!(out, "{} {}", self.node_count, self.dim)?;
        for node in 0..self.node_count as NodeId {
            write!(out, "{}", graph.node_name(node))?;
            for v in self.embedding(node) {
                write!(out, " {v:.6}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Exact objective value with its two terms and normalizers.
#[derive(Debug, Clone, Copy)]
pub struct ObjectiveReport {
    pub structure_term: f64,
    pub attribute_term: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub total: f64,
}

/// Fill `logits[..items]` with `phi . col_k` and return the stabilized
/// log-sum-exp over them.
fn log_sum_exp_into(
    phi: &[f64],
    matrix: &[f64],
    items: usize,
    dim: usize,
    logits: &mut [f64],
) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for (k, logit) in logits.iter_mut().take(items).enumerate() {
        *logit = dot(phi, &matrix[k * dim..(k + 1) * dim]);
        max = max.max(*logit);
    }
    let sum: f64 = logits[..items].iter().map(|&z| (z - max).exp()).sum();
    max + sum.ln()
}

fn grads_impl(phi: &[f64], matrix: &[f64], dim: usize, pos: u32, negs: &[u32]) -> PairGradients {
    let col = |j: u32| &matrix[j as usize * dim..(j as usize + 1) * dim];
    let a_pos = sigmoid(dot(phi, col(pos))) - 1.0;

    let mut input = vec![0.0; dim];
    axpy(&mut input, a_pos, col(pos));
    let positive: Vec<f64> = phi.iter().map(|&p| a_pos * p).collect();

    let negatives: Vec<Vec<f64>> = negs
        .iter()
        .map(|&k| {
            let a = sigmoid(dot(phi, col(k)));
            axpy(&mut input, a, col(k));
            phi.iter().map(|&p| a * p).collect()
        })
        .collect();

    PairGradients {
        input,
        positive,
        negatives,
    }
}

/// The shared SGD step: batch semantics (all sigmoids read pre-update
/// parameters), then output columns, then the input row.
#[allow(clippy::too_many_arguments)]
fn step_kernel(
    w_in: &mut [f64],
    w_out: &mut [f64],
    dim: usize,
    center: u32,
    pos: u32,
    negs: &[u32],
    eta: f64,
    scratch: &mut StepScratch,
) {
    let row = center as usize * dim;
    let pos_col = pos as usize * dim;

    scratch.grad_in.iter_mut().for_each(|v| *v = 0.0);
    scratch.sigmas.clear();

    {
        let phi = &w_in[row..row + dim];
        let a_pos = sigmoid(dot(phi, &w_out[pos_col..pos_col + dim])) - 1.0;
        scratch.sigmas.push(a_pos);
        axpy(&mut scratch.grad_in, a_pos, &w_out[pos_col..pos_col + dim]);
        for &k in negs {
            let kc = k as usize * dim;
            let a = sigmoid(dot(phi, &w_out[kc..kc + dim]));
            scratch.sigmas.push(a);
            axpy(&mut scratch.grad_in, a, &w_out[kc..kc + dim]);
        }
    }

    // Output updates still read the untouched input row.
    let a_pos = scratch.sigmas[0];
    axpy(
        &mut w_out[pos_col..pos_col + dim],
        -eta * a_pos,
        &w_in[row..row + dim],
    );
    for (occ, &k) in negs.iter().enumerate() {
        let kc = k as usize * dim;
        axpy(
            &mut w_out[kc..kc + dim],
            -eta * scratch.sigmas[occ + 1],
            &w_in[row..row + dim],
        );
    }

    axpy(&mut w_in[row..row + dim], -eta, &scratch.grad_in);
}
