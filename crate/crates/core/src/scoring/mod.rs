//! Ranking of grounded queries by a sentence-level pattern score plus a
//! word-level matching score.

pub mod bags;
pub mod embeddings;
pub mod patterns;
pub mod rank;
pub mod sentence;
pub mod word_model;

pub use bags::{query_bag, question_bag, split_identifier, EmptyBag, WordBag};
pub use embeddings::{EmbeddingError, EmbeddingTable};
pub use patterns::{question_pattern, BankEntry, BankError, PatternBank, QueryPattern, QuestionPattern};
pub use rank::{total_rank, RankedCandidate};
pub use sentence::{best_entry, pattern_similarity, sentence_score};
pub use word_model::{
    fit_bag, pooled, sigmoid, train_word_scorer, CheckpointError, ScoreError, WordExample, WordHyper, WordParams,
    WordScorerModel, WordTrainError, WordTrainReport,
};
