//! The four skeleton-parsing decisions behind one contract, with a gold
//! replay oracle and a trainable linear implementation.

pub mod features;
pub mod instances;
pub mod linear;
pub mod oracle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{AttachmentLabel, TokenSpan, WorkingSentence};

pub use features::{featurize, SparseFeatures};
pub use instances::{extract_instances, gold_split_order, Procedure, TrainingInstance};
pub use linear::{train_backend, LinearBackend, TrainConfig};
pub use oracle::OracleBackend;

/// Longest input any backend procedure accepts.
pub const MAX_SEQUENCE: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("input of {len} tokens exceeds the limit of {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("no valid candidate for this input")]
    NoCandidate,
    #[error("no gold decision recorded for `{0}`")]
    Unknown(String),
}

/// Split, TextSpanPrediction, HeadwordIdentification and
/// AttachmentRelationClassification.
pub trait ProcedureBackend {
    /// Whether the working sentence needs a further split.
    fn split_decision(&self, sentence: &WorkingSentence) -> Result<bool, BackendError>;

    /// Next span to split off, as indices into the working sentence.
    fn predict_span(&self, sentence: &WorkingSentence) -> Result<TokenSpan, BackendError>;

    /// Index of the single headword in `remaining` that `span` attaches to.
    fn identify_headword(&self, span: &[String], remaining: &WorkingSentence) -> Result<usize, BackendError>;

    fn classify_relation(&self, span: &[String], remaining: &WorkingSentence) -> Result<AttachmentLabel, BackendError>;
}

impl<B: ProcedureBackend + ?Sized> ProcedureBackend for Box<B> {
    fn split_decision(&self, s: &WorkingSentence) -> Result<bool, BackendError> {
        (**self).split_decision(s)
    }
    fn predict_span(&self, s: &WorkingSentence) -> Result<TokenSpan, BackendError> {
        (**self).predict_span(s)
    }
    fn identify_headword(&self, span: &[String], r: &WorkingSentence) -> Result<usize, BackendError> {
        (**self).identify_headword(span, r)
    }
    fn classify_relation(&self, span: &[String], r: &WorkingSentence) -> Result<AttachmentLabel, BackendError> {
        (**self).classify_relation(span, r)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub correct: usize,
    pub total: usize,
}

impl Agreement {
    pub fn rate(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }

    fn record(&mut self, ok: bool) {
        self.total += 1;
        self.correct += ok as usize;
    }
}

/// Per-procedure agreement of a backend with gold decisions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ProcedureAccuracy {
    pub split: Agreement,
    pub span: Agreement,
    pub headword: Agreement,
    pub relation: Agreement,
}

/// Runs every instance through `backend`; backend errors count as disagreement.
pub fn procedure_accuracy<B: ProcedureBackend + ?Sized>(backend: &B, instances: &[TrainingInstance]) -> ProcedureAccuracy {
    let mut acc = ProcedureAccuracy::default();
    for inst in instances {
        match inst {
            TrainingInstance::Split { question_id, sentence, split } => {
                let ws = WorkingSentence::from_tokens(question_id, sentence.clone());
                acc.split.record(backend.split_decision(&ws).ok() == Some(*split));
            }
            TrainingInstance::Span { question_id, sentence, span } => {
                let ws = WorkingSentence::from_tokens(question_id, sentence.clone());
                acc.span.record(backend.predict_span(&ws).ok() == Some(*span));
            }
            TrainingInstance::Headword { question_id, span, remaining, head } => {
                let ws = WorkingSentence::from_tokens(question_id, remaining.clone());
                acc.headword.record(backend.identify_headword(span, &ws).ok() == Some(*head));
            }
            TrainingInstance::Relation { question_id, span, remaining, label } => {
                let ws = WorkingSentence::from_tokens(question_id, remaining.clone());
                acc.relation.record(backend.classify_relation(span, &ws).ok() == Some(*label));
            }
        }
    }
    acc
}
