//! Skeleton-based semantic parsing for question answering over a small
//! in-memory knowledge base.
//!
//! A question is split into a tree of text spans, the per-span dependency
//! parses are joined, nodes and relations are extracted into a query graph,
//! structural variants of that graph are grounded against a triple store and
//! the grounded candidates are ranked by a pattern matcher and a neural word
//! matcher.

pub mod backend;
pub mod harness;
pub mod kb;
pub mod query;
pub mod scalar;
pub mod scoring;
pub mod text;
pub mod words;

pub use scalar::Scalar;

/// Trained procedure backend in double precision.
pub type TrainedBackend = backend::LinearBackend<f64>;
pub type Embeddings = scoring::EmbeddingTable<f64>;
/// Word-level scorer in double precision.
pub type WordScorer = scoring::WordScorerModel<f64>;
pub type WordScorerParams = scoring::WordParams<f64>;
