//! Gold skeleton files: one JSON object per line.
//!
//! ```text
//! {"question_id": "q1", "text": "...", "nodes": [
//!   {"spans": [[0, 2], [7, 11]], "parent": -1, "head_token": null, "label": null},
//!   {"spans": [[2, 7]], "parent": 0, "head_token": 1, "label": "acl:relcl"}]}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::skeleton::{Attachment, AttachmentLabel, Skeleton, SkeletonError, SkeletonNode, TokenSpan};
use super::{Question, TextError};

#[derive(Debug, Error)]
pub enum GoldError {
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Schema { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Invalid { line: usize, source: SkeletonError },
    #[error("line {line}: {source}")]
    Text { line: usize, source: TextError },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GoldNodeRecord {
    spans: Vec<(usize, usize)>,
    parent: i64,
    head_token: Option<usize>,
    label: Option<AttachmentLabel>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GoldRecord {
    question_id: String,
    text: String,
    nodes: Vec<GoldNodeRecord>,
}

/// A question paired with its annotated skeleton.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldSkeleton {
    pub question: Question,
    pub skeleton: Skeleton,
}

fn record_to_gold(rec: GoldRecord, line: usize) -> Result<GoldSkeleton, GoldError> {
    let question = Question::new(rec.question_id.clone(), &rec.text).map_err(|source| GoldError::Text { line, source })?;
    let schema = |msg: String| GoldError::Schema { line, msg };
    let mut root = None;
    let mut nodes = Vec::with_capacity(rec.nodes.len());
    for (i, n) in rec.nodes.iter().enumerate() {
        let spans: Vec<TokenSpan> = n.spans.iter().map(|&(s, e)| TokenSpan::new(s, e)).collect();
        let attachment = match (n.parent, n.head_token, n.label) {
            (-1, None, None) => {
                if root.replace(i).is_some() {
                    return Err(schema("more than one root node".into()));
                }
                None
            }
            (p, Some(head_token), Some(label)) if p >= 0 => Some(Attachment { parent: p as usize, head_token, label }),
            _ => return Err(schema(format!("node {i}: parent, head_token and label must be all set or all absent"))),
        };
        nodes.push(SkeletonNode { spans, attachment });
    }
    let root = root.ok_or_else(|| schema("no root node".into()))?;
    let skeleton = Skeleton { question_id: rec.question_id, token_count: question.len(), nodes, root };
    skeleton.validate().map_err(|source| GoldError::Invalid { line, source })?;
    Ok(GoldSkeleton { question, skeleton: skeleton.canonical() })
}

pub fn parse_gold(text: &str) -> Result<Vec<GoldSkeleton>, GoldError> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: GoldRecord =
            serde_json::from_str(line).map_err(|e| GoldError::Schema { line: no + 1, msg: e.to_string() })?;
        out.push(record_to_gold(rec, no + 1)?);
    }
    Ok(out)
}

pub fn load_gold(path: &Path) -> Result<Vec<GoldSkeleton>, GoldError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| GoldError::Io { path: path.display().to_string(), source })?;
    parse_gold(&text)
}

/// Serializes a skeleton as one gold-format JSON line.
pub fn to_gold_line(question: &Question, skel: &Skeleton) -> String {
    let rec = GoldRecord {
        question_id: skel.question_id.clone(),
        text: question.raw_text.clone(),
        nodes: skel
            .nodes
            .iter()
            .map(|n| GoldNodeRecord {
                spans: n.spans.iter().map(|s| (s.start, s.end)).collect(),
                parent: n.attachment.map_or(-1, |a| a.parent as i64),
                head_token: n.attachment.map(|a| a.head_token),
                label: n.attachment.map(|a| a.label),
            })
            .collect(),
    };
    serde_json::to_string(&rec).expect("gold record serializes")
}
