use std::collections::BTreeSet;

use super::patterns::{PatternBank, QuestionPattern};
use super::EmbeddingTable;
use crate::kb::{execute, GroundedQuery, Provenance, Term, TripleStore};
use crate::scalar::{cosine, Scalar};

/// Half cosine of mean embeddings plus half token-set Jaccard, in [0, 1].
/// When either side has no embedded word the cosine carries no signal and
/// Jaccard alone is returned.
pub fn pattern_similarity<S: Scalar>(a: &QuestionPattern, b: &QuestionPattern, emb: &EmbeddingTable<S>) -> S {
    let lower = |p: &QuestionPattern| -> Vec<String> { p.tokens().iter().map(|t| t.to_lowercase()).collect() };
    let (ta, tb) = (lower(a), lower(b));
    let (sa, sb): (BTreeSet<&String>, BTreeSet<&String>) = (ta.iter().collect(), tb.iter().collect());
    let union = sa.union(&sb).count();
    let jaccard = if union == 0 {
        S::one()
    } else {
        S::from_usize(sa.intersection(&sb).count()).unwrap() / S::from_usize(union).unwrap()
    };
    let (ma, mb) = (emb.mean(&ta), emb.mean(&tb));
    let zero = |v: &[S]| v.iter().all(|x| *x == S::zero());
    let sim = if zero(&ma) || zero(&mb) {
        jaccard
    } else {
        S::lit(0.5) * cosine(&ma, &mb) + S::lit(0.5) * jaccard
    };
    sim.max(S::zero()).min(S::one())
}

/// Index of the most similar bank entry with the same dummy-token count;
/// the first one on ties.
pub fn best_entry<S: Scalar>(test: &QuestionPattern, bank: &PatternBank, emb: &EmbeddingTable<S>) -> Option<usize> {
    let mut best: Option<(usize, S)> = None;
    for (i, e) in bank.entries.iter().enumerate() {
        if e.question_pattern.dummy_count() != test.dummy_count() {
            continue;
        }
        let s = pattern_similarity(test, &e.question_pattern, emb);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

/// Scores every candidate 0.0, except the instantiation of the closest bank
/// entry's query pattern, which scores 1.0 when it has answers in the store.
/// That query is appended to `candidates` if no candidate has its shape.
/// `entities` are the test question's linked entities in mention order.
pub fn sentence_score<S: Scalar>(
    test: &QuestionPattern,
    entities: &[Term],
    bank: &PatternBank,
    emb: &EmbeddingTable<S>,
    store: &TripleStore,
    candidates: &mut Vec<GroundedQuery>,
) -> Vec<f64> {
    let mut scores = vec![0.0; candidates.len()];
    let Some(k) = best_entry(test, bank, emb) else { return scores };
    let Some(g) = bank.entries[k].query_pattern.instantiate(entities, Provenance::PatternBank(k)) else {
        return scores;
    };
    if execute(&g, store).is_empty() {
        return scores;
    }
    let key = g.canonical_key();
    match candidates.iter().position(|c| c.canonical_key() == key) {
        Some(i) => scores[i] = 1.0,
        None => {
            candidates.push(g);
            scores.push(1.0);
        }
    }
    scores
}
