//! Configuration, datasets, the end-to-end pipeline, metrics and scorer
//! training.

pub mod config;
pub mod dataset;
pub mod evaluate;
pub mod pipeline;
pub mod train;

use thiserror::Error;

pub use config::{Ablation, BackendKind, Paths, PipelineConfig};
pub use dataset::{load_dataset, parse_dataset, DatasetRecord};
pub use evaluate::{evaluate, f1, hit_at_1, Aggregate, EvalResult, QuestionResult};
pub use pipeline::{Answer, Pipeline, Prepared, RankedAnswer, Stage, StageError, Trace};
pub use train::{build_bank, eval_skeletons, supervise, train_scorer, word_examples, SkeletonReport, Supervised};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("dataset line {line}: {msg}")]
    Schema { line: usize, msg: String },
    #[error("gold skeleton file is empty")]
    EmptyGold,
    #[error(transparent)]
    Store(#[from] crate::kb::StoreError),
    #[error(transparent)]
    Alias(#[from] crate::kb::AliasError),
    #[error(transparent)]
    Embeddings(#[from] crate::scoring::EmbeddingError),
    #[error(transparent)]
    Gold(#[from] crate::text::gold::GoldError),
    #[error(transparent)]
    Instances(#[from] crate::backend::instances::InstanceError),
    #[error(transparent)]
    Weights(#[from] crate::backend::linear::WeightsError),
    #[error(transparent)]
    Train(#[from] crate::backend::linear::TrainError),
    #[error(transparent)]
    Deps(#[from] crate::text::deps::DepError),
    #[error(transparent)]
    Bank(#[from] crate::scoring::BankError),
    #[error(transparent)]
    Checkpoint(#[from] crate::scoring::CheckpointError),
    #[error(transparent)]
    WordTrain(#[from] crate::scoring::WordTrainError),
}
