//! Training instances derived from gold skeletons by replaying them in the
//! canonical split order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::gold::GoldSkeleton;
use crate::text::skeleton::{AttachmentLabel, Skeleton, SkeletonError, TokenSpan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Procedure {
    Split,
    Span,
    Headword,
    Relation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrainingInstance {
    Split { question_id: String, sentence: Vec<String>, split: bool },
    Span { question_id: String, sentence: Vec<String>, span: TokenSpan },
    Headword { question_id: String, span: Vec<String>, remaining: Vec<String>, head: usize },
    Relation { question_id: String, span: Vec<String>, remaining: Vec<String>, label: AttachmentLabel },
}

impl TrainingInstance {
    pub fn procedure(&self) -> Procedure {
        match self {
            TrainingInstance::Split { .. } => Procedure::Split,
            TrainingInstance::Span { .. } => Procedure::Span,
            TrainingInstance::Headword { .. } => Procedure::Headword,
            TrainingInstance::Relation { .. } => Procedure::Relation,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("invalid gold skeleton for `{id}`: {reason}")]
    InvalidGold { id: String, reason: String },
}

impl InstanceError {
    fn invalid(id: &str, reason: impl ToString) -> Self {
        InstanceError::InvalidGold { id: id.to_string(), reason: reason.to_string() }
    }
}

impl From<(String, SkeletonError)> for InstanceError {
    fn from((id, e): (String, SkeletonError)) -> Self {
        InstanceError::invalid(&id, e)
    }
}

/// Order in which the non-root nodes of `skel` are split off: among the
/// current leaves the deepest goes first, ties broken by rightmost start.
pub fn gold_split_order(skel: &Skeleton) -> Vec<usize> {
    let n = skel.nodes.len();
    let mut alive = vec![true; n];
    let mut order = Vec::with_capacity(n.saturating_sub(1));
    loop {
        let leaves = (0..n).filter(|&i| {
            alive[i] && i != skel.root && !skel.attachments().any(|(c, a)| alive[c] && a.parent == i)
        });
        let Some(next) = leaves.max_by_key(|&i| (skel.depth(i), skel.nodes[i].first_token())) else {
            break;
        };
        alive[next] = false;
        order.push(next);
    }
    order
}

fn surfaces(words: &[String], idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&i| words[i].clone()).collect()
}

/// Per gold skeleton: one instance of each procedure for every split step,
/// then a negative Split instance on the fully reduced sentence.
pub fn extract_instances(bank: &[GoldSkeleton]) -> Result<Vec<TrainingInstance>, InstanceError> {
    let mut out = Vec::new();
    for g in bank {
        let id = g.skeleton.question_id.clone();
        g.skeleton.validate().map_err(|e| (id.clone(), e))?;
        if g.skeleton.token_count != g.question.len() {
            return Err(InstanceError::invalid(&id, "token count differs from question"));
        }
        let words = g.question.surfaces();
        let mut remaining: Vec<usize> = (0..words.len()).collect();
        for node_idx in gold_split_order(&g.skeleton) {
            let node = &g.skeleton.nodes[node_idx];
            let att = node.attachment.expect("non-root node is attached");
            let node_tokens: Vec<usize> = node.tokens().collect();
            let pos: Vec<usize> = node_tokens
                .iter()
                .map(|t| remaining.iter().position(|r| r == t))
                .collect::<Option<_>>()
                .ok_or_else(|| InstanceError::invalid(&id, "node tokens already removed"))?;
            let (start, end) = (pos[0], pos[pos.len() - 1] + 1);
            if end - start != pos.len() {
                return Err(InstanceError::invalid(&id, format!("node {node_idx} is not contiguous in its working sentence")));
            }
            let rest: Vec<usize> = remaining.iter().copied().filter(|t| !node_tokens.contains(t)).collect();
            let head = rest
                .iter()
                .position(|&t| t == att.head_token)
                .ok_or_else(|| InstanceError::invalid(&id, format!("headword of node {node_idx} is not in the remaining sentence")))?;
            let sentence = surfaces(&words, &remaining);
            let span_words = surfaces(&words, &node_tokens);
            let rest_words = surfaces(&words, &rest);
            out.push(TrainingInstance::Split { question_id: id.clone(), sentence: sentence.clone(), split: true });
            out.push(TrainingInstance::Span { question_id: id.clone(), sentence, span: TokenSpan::new(start, end) });
            out.push(TrainingInstance::Headword {
                question_id: id.clone(),
                span: span_words.clone(),
                remaining: rest_words.clone(),
                head,
            });
            out.push(TrainingInstance::Relation {
                question_id: id.clone(),
                span: span_words,
                remaining: rest_words,
                label: att.label,
            });
            remaining = rest;
        }
        out.push(TrainingInstance::Split { question_id: id.clone(), sentence: surfaces(&words, &remaining), split: false });
    }
    Ok(out)
}
