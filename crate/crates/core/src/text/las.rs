//! Span-level labeled attachment score between two skeletons.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::skeleton::Skeleton;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("skeletons are over different questions ({0} vs {1})")]
pub struct QuestionMismatch(pub String, pub String);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LasScore {
    pub matched: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl LasScore {
    /// Matched attachments over the larger attachment count; 1 when both are empty.
    pub fn value(&self) -> f64 {
        let denom = self.predicted.max(self.gold);
        if denom == 0 {
            1.0
        } else {
            self.matched as f64 / denom as f64
        }
    }

    pub fn add(&mut self, other: LasScore) {
        self.matched += other.matched;
        self.predicted += other.predicted;
        self.gold += other.gold;
    }
}

/// A predicted attachment counts when a gold node has the same span set,
/// headword and label.
pub fn las(predicted: &Skeleton, gold: &Skeleton) -> Result<LasScore, QuestionMismatch> {
    if predicted.question_id != gold.question_id || predicted.token_count != gold.token_count {
        return Err(QuestionMismatch(predicted.question_id.clone(), gold.question_id.clone()));
    }
    let gold_atts: Vec<_> = gold.attachments().map(|(i, a)| (&gold.nodes[i].spans, a.head_token, a.label)).collect();
    let matched = predicted
        .attachments()
        .filter(|(i, a)| {
            let key = (&predicted.nodes[*i].spans, a.head_token, a.label);
            gold_atts.contains(&key)
        })
        .count();
    Ok(LasScore { matched, predicted: predicted.attachments().count(), gold: gold_atts.len() })
}
