//! The end-to-end training loop.
//!
//! Preparation builds the walk corpus, reduces it to context-pair counts, and
//! compiles four alias tables: the two pair distributions (context counts and
//! observed attribute mass) and the two negative-sampling distributions
//! (per-node context mass and per-attribute mass, each to the 3/4 power).
//! Every SGD iteration then flips a coin between a structure step and an
//! attribute step, samples a pair and `K` negatives in O(1), and applies one
//! negative-sampling gradient update.
//!
//! When one side has no mass at all, the coin flip is bypassed and every
//! iteration goes to the other side, which recovers the structure-only and
//! attribute-only baselines. A side also needs at least two items with
//! positive mass to draw negatives from; otherwise it is disabled with a
//! warning.
//!
//! With `threads = 1` (the default) training is single-threaded and exactly
//! replayable from the seed. With more threads, workers share the parameter
//! matrices and apply unsynchronized relaxed-atomic updates; races are
//! benign for SGD but runs are no longer reproducible.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{AttrId, AttributedGraph, NodeId};
use crate::model::{ConfigError, EmbeddingModel, StepScratch, TrainConfig};
use crate::sampling::{AliasTable, NegativeSampler, SamplingError};
use crate::seeds;
use crate::walks::{count_context_pairs, generate_walks, ContextPairCounts};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("nothing to train on: no context pairs and no observed attribute mass")]
    NoTrainingSignal,
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error("training produced non-finite parameters")]
    NonFinite,
    #[error("checkpoint observation requires single-threaded training")]
    ObserverNeedsSingleThread,
}

/// How the iterations split between the two objectives.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrainStats {
    pub structure_steps: u64,
    pub attr_steps: u64,
}

/// Wall-clock cost of the preparation phases.
#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseTimings {
    pub walks: Duration,
    pub counting: Duration,
    pub tables: Duration,
}

struct PairSide<I> {
    table: AliasTable,
    entries: Vec<(NodeId, I)>,
    negatives: NegativeSampler,
}

/// Prepared training state: the pair distributions and negative samplers,
/// reusable across runs on the same graph.
pub struct Trainer<'g> {
    graph: &'g AttributedGraph,
    config: TrainConfig,
    counts: ContextPairCounts,
    structure: Option<PairSide<NodeId>>,
    attrs: Option<PairSide<AttrId>>,
    timings: PhaseTimings,
}

impl<'g> Trainer<'g> {
    /// Generate walks, count context pairs, and compile the sampling tables.
    pub fn new(graph: &'g AttributedGraph, config: TrainConfig) -> Result<Self, TrainError> {
        config.validate()?;

        let start = Instant::now();
        let walks = generate_walks(
            graph,
            config.walk_len,
            config.walks_per_node,
            seeds::derive(config.seed, "walks"),
        );
        let walks_time = start.elapsed();

        let start = Instant::now();
        let counts = count_context_pairs(&walks, config.window);
        let counting_time = start.elapsed();
        drop(walks);

        let start = Instant::now();
        let structure = if counts.total() > 0 {
            let sorted = counts.sorted_entries();
            let mut entries = Vec::with_capacity(sorted.len());
            let mut weights = Vec::with_capacity(sorted.len());
            for ((center, context), count) in sorted {
                entries.push((center, context));
                weights.push(count as f64);
            }
            Some(PairSide {
                table: AliasTable::new(&weights)?,
                entries,
                negatives: NegativeSampler::from_masses(&counts.row_mass(graph.node_count()))?,
            })
        } else {
            None
        };

        let attrs = {
            let mut entries = Vec::new();
            let mut weights = Vec::new();
            for node in 0..graph.node_count() as NodeId {
                for &(attr, value) in graph.attrs(node) {
                    if value > 0.0 {
                        entries.push((node, attr));
                        weights.push(value);
                    }
                }
            }
            if entries.is_empty() {
                None
            } else {
                let negatives = NegativeSampler::from_masses(&graph.attr_col_mass())?;
                if negatives.positive_mass_items() < 2 {
                    log::warn!(
                        "only one attribute carries observed mass; disabling attribute steps"
                    );
                    None
                } else {
                    Some(PairSide {
                        table: AliasTable::new(&weights)?,
                        entries,
                        negatives,
                    })
                }
            }
        };
        let tables_time = start.elapsed();

        if structure.is_none() && attrs.is_none() {
            return Err(TrainError::NoTrainingSignal);
        }

        Ok(Self {
            graph,
            config,
            counts,
            structure,
            attrs,
            timings: PhaseTimings {
                walks: walks_time,
                counting: counting_time,
                tables: tables_time,
            },
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn counts(&self) -> &ContextPairCounts {
        &self.counts
    }

    pub fn timings(&self) -> &PhaseTimings {
        &self.timings
    }

    /// Run the configured number of SGD iterations on a fresh model.
    pub fn train(&self) -> Result<(EmbeddingModel, TrainStats), TrainError> {
        if self.config.threads > 1 {
            self.train_parallel()
        } else {
            self.train_single(None)
        }
    }

    /// Single-threaded run that hands the model to `observer` every `every`
    /// iterations (after iterations `every`, `2*every`, ...).
    pub fn train_observed(
        &self,
        every: u64,
        mut observer: impl FnMut(u64, &EmbeddingModel),
    ) -> Result<(EmbeddingModel, TrainStats), TrainError> {
        if self.config.threads > 1 {
            return Err(TrainError::ObserverNeedsSingleThread);
        }
        self.train_single(Some((every, &mut observer)))
    }

    fn init_model(&self) -> EmbeddingModel {
        EmbeddingModel::init(
            self.graph.node_count(),
            self.graph.attr_count(),
            self.config.dim,
            seeds::derive(self.config.seed, "init"),
        )
    }

    fn train_single(
        &self,
        mut observer: Option<(u64, &mut dyn FnMut(u64, &EmbeddingModel))>,
    ) -> Result<(EmbeddingModel, TrainStats), TrainError> {
        let cfg = &self.config;
        let mut model = self.init_model();
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(cfg.seed, "sgd"));
        let mut scratch = StepScratch::new(cfg.dim);
        let mut negs: Vec<u32> = Vec::with_capacity(cfg.negatives);
        let mut stats = TrainStats::default();

        let both = self.structure.is_some() && self.attrs.is_some();
        for tau in 0..cfg.max_iters {
            let eta = cfg.learning_rate(tau);
            let take_structure = if both {
                rng.random::<f64>() <= cfg.structure_prob
            } else {
                self.structure.is_some()
            };
            if take_structure {
                let side = self.structure.as_ref().unwrap();
                let (center, context) = side.entries[side.table.draw(&mut rng) as usize];
                side.negatives
                    .draw_negatives_into(context, cfg.negatives, &mut rng, &mut negs)?;
                model.sgd_step_structure_scratch(center, context, &negs, eta, &mut scratch);
                stats.structure_steps += 1;
            } else {
                let side = self.attrs.as_ref().unwrap();
                let (center, attr) = side.entries[side.table.draw(&mut rng) as usize];
                side.negatives
                    .draw_negatives_into(attr, cfg.negatives, &mut rng, &mut negs)?;
                model.sgd_step_attr_scratch(center, attr, &negs, eta, &mut scratch);
                stats.attr_steps += 1;
            }
            if let Some((every, obs)) = observer.as_mut() {
                if (tau + 1) % *every == 0 {
                    obs(tau + 1, &model);
                }
            }
        }

        if !model.is_finite() {
            return Err(TrainError::NonFinite);
        }
        Ok((model, stats))
    }

    fn train_parallel(&self) -> Result<(EmbeddingModel, TrainStats), TrainError> {
        let cfg = &self.config;
        let shared = SharedParams::from_model(self.init_model());
        let counter = AtomicU64::new(0);
        let threads = cfg.threads;
        let base = cfg.max_iters / threads as u64;
        let remainder = cfg.max_iters % threads as u64;

        let results: Vec<Result<TrainStats, TrainError>> = std::thread::scope(|scope| {
            let mut handles = Vec::with_capacity(threads);
            for w in 0..threads {
                let iters = base + u64::from((w as u64) < remainder);
                let shared = &shared;
                let counter = &counter;
                handles.push(scope.spawn(move || self.worker(w, iters, shared, counter)));
            }
            handles
                .into_iter()
                .map(|h| h.join().expect("training worker panicked"))
                .collect()
        });

        let mut stats = TrainStats::default();
        for r in results {
            let s = r?;
            stats.structure_steps += s.structure_steps;
            stats.attr_steps += s.attr_steps;
        }

        let model = shared.into_model(cfg.dim);
        if !model.is_finite() {
            return Err(TrainError::NonFinite);
        }
        Ok((model, stats))
    }

    fn worker(
        &self,
        id: usize,
        iters: u64,
        shared: &SharedParams,
        counter: &AtomicU64,
    ) -> Result<TrainStats, TrainError> {
        let cfg = &self.config;
        let mut rng =
            ChaCha8Rng::seed_from_u64(seeds::derive(cfg.seed, &format!("sgd-worker-{id}")));
        let mut bufs = WorkerBuffers::new(cfg.dim);
        let mut negs: Vec<u32> = Vec::with_capacity(cfg.negatives);
        let mut stats = TrainStats::default();

        let both = self.structure.is_some() && self.attrs.is_some();
        for _ in 0..iters {
            let tau = counter.fetch_add(1, Ordering::Relaxed);
            let eta = cfg.learning_rate(tau);
            let take_structure = if both {
                rng.random::<f64>() <= cfg.structure_prob
            } else {
                self.structure.is_some()
            };
            if take_structure {
                let side = self.structure.as_ref().unwrap();
                let (center, context) = side.entries[side.table.draw(&mut rng) as usize];
                side.negatives
                    .draw_negatives_into(context, cfg.negatives, &mut rng, &mut negs)?;
                shared.step(true, center, context, &negs, eta, &mut bufs);
                stats.structure_steps += 1;
            } else {
                let side = self.attrs.as_ref().unwrap();
                let (center, attr) = side.entries[side.table.draw(&mut rng) as usize];
                side.negatives
                    .draw_negatives_into(attr, cfg.negatives, &mut rng, &mut negs)?;
                shared.step(false, center, attr, &negs, eta, &mut bufs);
                stats.attr_steps += 1;
            }
        }
        Ok(stats)
    }
}

/// Train with the given configuration and return the embedding model.
pub fn train(graph: &AttributedGraph, config: TrainConfig) -> Result<EmbeddingModel, TrainError> {
    Trainer::new(graph, config)?.train().map(|(model, _)| model)
}

struct WorkerBuffers {
    phi: Vec<f64>,
    col: Vec<f64>,
    grad_in: Vec<f64>,
    sigmas: Vec<f64>,
}

impl WorkerBuffers {
    fn new(dim: usize) -> Self {
        Self {
            phi: vec![0.0; dim],
            col: vec![0.0; dim],
            grad_in: vec![0.0; dim],
            sigmas: Vec::with_capacity(16),
        }
    }
}

/// Parameters shared across workers as relaxed atomics. Every scalar read
/// and write is a whole-word atomic, so racy updates can lose increments but
/// never produce torn values.
struct SharedParams {
    w_in: Vec<AtomicU64>,
    w_out_s: Vec<AtomicU64>,
    w_out_a: Vec<AtomicU64>,
    dim: usize,
}

#[inline]
fn load(cell: &AtomicU64) -> f64 {
    f64::from_bits(cell.load(Ordering::Relaxed))
}

#[inline]
fn store(cell: &AtomicU64, value: f64) {
    cell.store(value.to_bits(), Ordering::Relaxed);
}

fn to_atomic(values: Vec<f64>) -> Vec<AtomicU64> {
    values
        .into_iter()
        .map(|v| AtomicU64::new(v.to_bits()))
        .collect()
}

fn from_atomic(cells: Vec<AtomicU64>) -> Vec<f64> {
    cells
        .into_iter()
        .map(|c| f64::from_bits(c.into_inner()))
        .collect()
}

impl SharedParams {
    fn from_model(model: EmbeddingModel) -> Self {
        let dim = model.dim();
        let (w_in, w_out_s, w_out_a) = model.into_raw();
        Self {
            w_in: to_atomic(w_in),
            w_out_s: to_atomic(w_out_s),
            w_out_a: to_atomic(w_out_a),
            dim,
        }
    }

    fn into_model(self, dim: usize) -> EmbeddingModel {
        EmbeddingModel::from_parts(
            dim,
            from_atomic(self.w_in),
            from_atomic(self.w_out_s),
            from_atomic(self.w_out_a),
        )
    }

    /// One SGD step against the shared matrices. Mirrors the sequential
    /// kernel: sigmoids from a snapshot of the touched rows, then output
    /// columns, then the input row.
    fn step(
        &self,
        structure: bool,
        center: u32,
        pos: u32,
        negs: &[u32],
        eta: f64,
        bufs: &mut WorkerBuffers,
    ) {
        let dim = self.dim;
        let out = if structure { &self.w_out_s } else { &self.w_out_a };
        let row = center as usize * dim;

        for d in 0..dim {
            bufs.phi[d] = load(&self.w_in[row + d]);
            bufs.grad_in[d] = 0.0;
        }
        bufs.sigmas.clear();

        let snapshot_col = |item: u32, col: &mut [f64]| {
            let start = item as usize * dim;
            for (d, slot) in col.iter_mut().enumerate() {
                *slot = load(&out[start + d]);
            }
        };

        snapshot_col(pos, &mut bufs.col);
        let a_pos = sigmoid(dot(&bufs.phi, &bufs.col)) - 1.0;
        bufs.sigmas.push(a_pos);
        for (d, &c) in bufs.col.iter().enumerate() {
            bufs.grad_in[d] += a_pos * c;
        }
        for &k in negs {
            snapshot_col(k, &mut bufs.col);
            let a = sigmoid(dot(&bufs.phi, &bufs.col));
            bufs.sigmas.push(a);
            for (d, &c) in bufs.col.iter().enumerate() {
                bufs.grad_in[d] += a * c;
            }
        }

        let update_col = |item: u32, a: f64| {
            let start = item as usize * dim;
            for d in 0..dim {
                let cell = &out[start + d];
                store(cell, load(cell) - eta * a * bufs.phi[d]);
            }
        };
        update_col(pos, bufs.sigmas[0]);
        for (occ, &k) in negs.iter().enumerate() {
            update_col(k, bufs.sigmas[occ + 1]);
        }

        for d in 0..dim {
            let cell = &self.w_in[row + d];
            store(cell, load(cell) - eta * bufs.grad_in[d]);
        }
    }
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
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_block_graph() -> AttributedGraph {
        // Two triangles joined by one edge, plus block-indicative attributes.
        AttributedGraph::from_edges_text("a b\nb c\nc a\nd e\ne f\nf d\nc d\n")
            .unwrap()
            .with_attrs_text("a x 1\nb x 1\nc x 1\nd y 1\ne y 1\nf y 1\n")
            .unwrap()
    }

    fn desk_config() -> TrainConfig {
        TrainConfig {
            walk_len: 10,
            walks_per_node: 5,
            window: 3,
            dim: 8,
            negatives: 3,
            max_iters: 2_000,
            seed: 7,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn structure_only_when_attrs_absent() {
        let g = AttributedGraph::from_edges_text("a b\nb c\nc a\n").unwrap();
        let trainer = Trainer::new(&g, desk_config()).unwrap();
        let (model, stats) = trainer.train().unwrap();
        assert!(model.is_finite());
        assert_eq!(stats.attr_steps, 0);
        assert_eq!(stats.structure_steps, 2_000);
    }

    #[test]
    fn attr_only_when_no_edges() {
        let g = AttributedGraph::from_edges_text("a a\nb b\n")
            .unwrap()
            .with_attrs_text("a x 1\nb y 1\n")
            .unwrap();
        let trainer = Trainer::new(&g, desk_config()).unwrap();
        let (model, stats) = trainer.train().unwrap();
        assert!(model.is_finite());
        assert_eq!(stats.structure_steps, 0);
        assert_eq!(stats.attr_steps, 2_000);
    }

    #[test]
    fn no_signal_is_an_error() {
        let g = AttributedGraph::from_edges_text("a a\n").unwrap();
        assert!(matches!(
            Trainer::new(&g, desk_config()),
            Err(TrainError::NoTrainingSignal)
        ));
    }

    #[test]
    fn single_massive_attribute_disables_attr_side() {
        let g = AttributedGraph::from_edges_text("a b\nb c\n")
            .unwrap()
            .with_attrs_text("a x 1\nb x 2\n")
            .unwrap();
        let trainer = Trainer::new(&g, desk_config()).unwrap();
        let (_, stats) = trainer.train().unwrap();
        assert_eq!(stats.attr_steps, 0);
    }

    #[test]
    fn training_is_deterministic() {
        let g = two_block_graph();
        let run = || {
            let trainer = Trainer::new(&g, desk_config()).unwrap();
            trainer.train().unwrap().0
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn coin_flip_fraction_matches_probability() {
        let g = two_block_graph();
        let cfg = TrainConfig {
            dim: 2,
            negatives: 2,
            max_iters: 1_000_000,
            ..desk_config()
        };
        let trainer = Trainer::new(&g, cfg).unwrap();
        let (_, stats) = trainer.train().unwrap();
        let fraction = stats.structure_steps as f64 / 1_000_000.0;
        assert!(
            (fraction - 0.5).abs() <= 0.002,
            "structure fraction {fraction}"
        );
        assert_eq!(stats.structure_steps + stats.attr_steps, 1_000_000);
    }

    #[test]
    fn observer_sees_checkpoints() {
        let g = two_block_graph();
        let trainer = Trainer::new(&g, desk_config()).unwrap();
        let mut taus = Vec::new();
        let (model, _) = trainer
            .train_observed(500, |tau, m| {
                assert!(m.is_finite());
                taus.push(tau);
            })
            .unwrap();
        assert_eq!(taus, vec![500, 1000, 1500, 2000]);
        assert!(model.is_finite());
    }

    #[test]
    fn objective_improves_during_training() {
        let g = two_block_graph();
        let cfg = TrainConfig {
            max_iters: 60_000,
            ..desk_config()
        };
        let trainer = Trainer::new(&g, cfg).unwrap();
        let initial = EmbeddingModel::init(g.node_count(), g.attr_count(), 8, 0)
            .exact_objective(trainer.counts(), &g)
            .total;
        let (model, _) = trainer.train().unwrap();
        let trained = model.exact_objective(trainer.counts(), &g).total;
        assert!(trained < initial, "objective {initial} -> {trained}");
    }

    #[test]
    fn parallel_mode_trains_and_stays_finite() {
        let g = two_block_graph();
        let cfg = TrainConfig {
            max_iters: 50_000,
            deterministic: false,
            threads: 4,
            ..desk_config()
        };
        let trainer = Trainer::new(&g, cfg).unwrap();
        let initial = EmbeddingModel::init(g.node_count(), g.attr_count(), 8, 0)
            .exact_objective(trainer.counts(), &g)
            .total;
        let (model, stats) = trainer.train().unwrap();
        assert!(model.is_finite());
        assert_eq!(stats.structure_steps + stats.attr_steps, 50_000);
        let trained = model.exact_objective(trainer.counts(), &g).total;
        assert!(trained < initial, "objective {initial} -> {trained}");
    }

    #[test]
    fn observer_rejected_in_parallel_mode() {
        let g = two_block_graph();
        let cfg = TrainConfig {
            deterministic: false,
            threads: 2,
            ..desk_config()
        };
        let trainer = Trainer::new(&g, cfg).unwrap();
        assert!(matches!(
            trainer.train_observed(100, |_, _| {}),
            Err(TrainError::ObserverNeedsSingleThread)
        ));
    }
}
