//! Node embeddings for attributed networks with missing data.
//!
//! This crate trains low-dimensional node representations from two signals at
//! once: node co-occurrence in truncated random walks, and observed
//! node/attribute pairs. Both are optimized with skip-gram style negative
//! sampling, sampling one pair per SGD iteration from alias tables. Because
//! only *observed* links and attribute entries ever contribute to the
//! objective, the learner degrades gracefully when rows, columns, or edges of
//! the input are missing.
//!
//! The crate also ships the surrounding benchmark machinery:
//!
//! - [`graph`]: attributed-graph model and text ingestion,
//! - [`walks`]: walk corpus generation and context-pair counting,
//! - [`sampling`]: alias-method samplers for pairs and negatives,
//! - [`model`]: parameters, probabilities, gradients, and SGD steps,
//! - [`train`]: the end-to-end training loop (single-thread deterministic or
//!   lock-free parallel),
//! - [`incomplete`]: corruption generators for missing-data experiments,
//! - [`eval`]: link-prediction datasets, edge operators, heuristics, and AUC,
//! - [`cli`]: the `attrembed` command-line front end.

pub mod cli;
pub mod eval;
pub mod graph;
pub mod incomplete;
pub mod model;
pub mod sampling;
pub mod train;
pub mod walks;

mod seeds;

pub use eval::{EdgeOperator, HeuristicKind, LinkClassifier, PairDataset};
pub use graph::{AttrId, AttributedGraph, LabelAssignment, NodeId};
pub use incomplete::{CorruptionKind, CorruptionSpec};
pub use model::{EmbeddingModel, ObjectiveReport, TrainConfig};
pub use sampling::{AliasTable, NegativeSampler};
pub use train::{train, TrainStats, Trainer};
pub use walks::ContextPairCounts;
