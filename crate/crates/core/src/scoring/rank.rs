use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::kb::GroundedQuery;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    /// Position in the candidate list handed to [`total_rank`].
    pub index: usize,
    pub sentence: f64,
    pub word: f64,
    pub total: f64,
}

/// Sorts candidates by `sentence + word`, descending. Equal totals go to
/// the query with fewer triple patterns, then to the smaller rendering.
pub fn total_rank(candidates: &[GroundedQuery], sentence: &[f64], word: &[f64]) -> Vec<RankedCandidate> {
    assert_eq!(candidates.len(), sentence.len(), "sentence scores must cover every candidate");
    assert_eq!(candidates.len(), word.len(), "word scores must cover every candidate");
    let rendered: Vec<String> = candidates.iter().map(ToString::to_string).collect();
    let mut out: Vec<RankedCandidate> = (0..candidates.len())
        .map(|i| RankedCandidate { index: i, sentence: sentence[i], word: word[i], total: sentence[i] + word[i] })
        .collect();
    out.sort_by(|a, b| {
        b.total
            .partial_cmp(&a.total)
            .unwrap_or(Ordering::Equal)
            .then_with(|| candidates[a.index].patterns.len().cmp(&candidates[b.index].patterns.len()))
            .then_with(|| rendered[a.index].cmp(&rendered[b.index]))
            .then_with(|| a.index.cmp(&b.index))
    });
    out
}
