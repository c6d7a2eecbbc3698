//! Iterative skeleton parsing driven by a [`ProcedureBackend`].

use thiserror::Error;

use super::skeleton::{AttachmentLabel, Skeleton, SkeletonError};
use super::Question;
use crate::backend::{BackendError, ProcedureBackend};

/// The tokens still present in the question at some parsing step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkingSentence {
    pub question_id: String,
    pub tokens: Vec<String>,
    /// Original question index of each working token.
    pub original: Vec<usize>,
}

impl WorkingSentence {
    pub fn new(q: &Question, indices: &[usize]) -> Self {
        WorkingSentence {
            question_id: q.id.clone(),
            tokens: indices.iter().map(|&i| q.surface(i).to_string()).collect(),
            original: indices.to_vec(),
        }
    }

    /// Detached sentence without an originating question.
    pub fn from_tokens(question_id: &str, tokens: Vec<String>) -> Self {
        let original = (0..tokens.len()).collect();
        WorkingSentence { question_id: question_id.to_string(), tokens, original }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens joined by single spaces.
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
    #[error("split count exceeded the token count {0}")]
    IterationLimit(usize),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("parser produced an invalid skeleton: {0}")]
    Invalid(#[from] SkeletonError),
}

struct Removed {
    tokens: Vec<usize>,
    head: usize,
}

/// Parses `q` into its skeleton by repeatedly asking the backend whether to
/// split, which span to split off, its headword and its relation.
pub fn parse_skeleton<B: ProcedureBackend + ?Sized>(
    q: &Question,
    backend: &B,
) -> Result<Skeleton, ParseError> {
    let n = q.len();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut removed: Vec<Removed> = Vec::new();
    let mut children: Vec<(Vec<usize>, usize, AttachmentLabel)> = Vec::new();

    // a single remaining token has no proper sub-span to split off
    while remaining.len() > 1 {
        let working = WorkingSentence::new(q, &remaining);
        if !backend.split_decision(&working)? {
            break;
        }
        if children.len() >= n {
            return Err(ParseError::IterationLimit(n));
        }
        let span = backend.predict_span(&working)?;
        let len = remaining.len();
        if span.is_empty() || span.end > len || span.len() >= len {
            return Err(ParseError::DegenerateSplit(format!(
                "span [{}, {}) over {} working tokens",
                span.start, span.end, len
            )));
        }
        let span_tokens: Vec<usize> = remaining[span.start..span.end].to_vec();
        let rest: Vec<usize> = remaining[..span.start]
            .iter()
            .chain(&remaining[span.end..])
            .copied()
            .collect();
        let span_words: Vec<String> = span_tokens.iter().map(|&i| q.surface(i).to_string()).collect();
        let rest_sentence = WorkingSentence::new(q, &rest);
        let head = backend.identify_headword(&span_words, &rest_sentence)?;
        if head >= rest.len() {
            return Err(ParseError::DegenerateSplit(format!(
                "headword {head} outside the {} remaining tokens",
                rest.len()
            )));
        }
        let label = backend.classify_relation(&span_words, &rest_sentence)?;
        check_crossing(&span_tokens, &removed, &remaining)?;

        removed.push(Removed { tokens: span_tokens.clone(), head: rest[head] });
        children.push((span_tokens, rest[head], label));
        remaining = rest;
    }
    Ok(Skeleton::from_parts(q.id.clone(), n, &remaining, &children)?)
}

/// A span may enclose previously split nodes only if they hang, directly or
/// through other split nodes, from a token of the span itself.
fn check_crossing(span: &[usize], removed: &[Removed], working: &[usize]) -> Result<(), ParseError> {
    let (lo, hi) = (span[0], span[span.len() - 1]);
    for r in removed {
        if !r.tokens.iter().any(|&t| lo < t && t < hi) {
            continue;
        }
        let mut head = r.head;
        let mut hops = 0;
        while !working.contains(&head) {
            let Some(next) = removed.iter().find(|o| o.tokens.contains(&head)) else {
                break;
            };
            head = next.head;
            hops += 1;
            if hops > removed.len() {
                break;
            }
        }
        if !span.contains(&head) {
            return Err(ParseError::DegenerateSplit(format!(
                "span crosses the boundary of an earlier split attached at token {head}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::skeleton::TokenSpan;
    use crate::text::tokenize;

    /// Backend replaying decisions keyed by working-sentence length.
    struct Scripted {
        // (working length, span, head in rest, label)
        steps: Vec<(usize, TokenSpan, usize, AttachmentLabel)>,
    }

    impl Scripted {
        fn by_span(&self, span: &[String]) -> &(usize, TokenSpan, usize, AttachmentLabel) {
            self.steps.iter().find(|st| st.1.len() == span.len()).unwrap()
        }
    }

    impl ProcedureBackend for Scripted {
        fn split_decision(&self, s: &WorkingSentence) -> Result<bool, BackendError> {
            Ok(self.steps.iter().any(|st| st.0 == s.len()))
        }
        fn predict_span(&self, s: &WorkingSentence) -> Result<TokenSpan, BackendError> {
            self.steps.iter().find(|st| st.0 == s.len()).map(|st| st.1).ok_or(BackendError::NoCandidate)
        }
        fn identify_headword(&self, span: &[String], _r: &WorkingSentence) -> Result<usize, BackendError> {
            Ok(self.by_span(span).2)
        }
        fn classify_relation(&self, span: &[String], _r: &WorkingSentence) -> Result<AttachmentLabel, BackendError> {
            Ok(self.by_span(span).3)
        }
    }

    struct Never;
    impl ProcedureBackend for Never {
        fn split_decision(&self, _: &WorkingSentence) -> Result<bool, BackendError> {
            Ok(false)
        }
        fn predict_span(&self, _: &WorkingSentence) -> Result<TokenSpan, BackendError> {
            unreachable!()
        }
        fn identify_headword(&self, _: &[String], _: &WorkingSentence) -> Result<usize, BackendError> {
            unreachable!()
        }
        fn classify_relation(&self, _: &[String], _: &WorkingSentence) -> Result<AttachmentLabel, BackendError> {
            unreachable!()
        }
    }

    struct WholeSpan;
    impl ProcedureBackend for WholeSpan {
        fn split_decision(&self, _: &WorkingSentence) -> Result<bool, BackendError> {
            Ok(true)
        }
        fn predict_span(&self, s: &WorkingSentence) -> Result<TokenSpan, BackendError> {
            Ok(TokenSpan::new(0, s.len()))
        }
        fn identify_headword(&self, _: &[String], _: &WorkingSentence) -> Result<usize, BackendError> {
            Ok(0)
        }
        fn classify_relation(&self, _: &[String], _: &WorkingSentence) -> Result<AttachmentLabel, BackendError> {
            Ok(AttachmentLabel::Acl)
        }
    }

    #[test]
    fn running_example_scripted() {
        let mut q = tokenize("what movie that Miley Cyrus acted in had a director named Tom Vaughan?").unwrap();
        q.id = "re".into();
        // step 1 over 14 tokens: "named Tom Vaughan" = [10,13), head "director" at 9 in the 11-token rest
        // step 2 over 11 tokens: "that Miley Cyrus acted in" = [2,7), head "movie" at 1
        let backend = Scripted {
            steps: vec![
                (14, TokenSpan::new(10, 13), 9, AttachmentLabel::Acl),
                (11, TokenSpan::new(2, 7), 1, AttachmentLabel::AclRelcl),
            ],
        };
        let s = parse_skeleton(&q, &backend).unwrap();
        assert_eq!(s.len(), 3);
        let root = &s.nodes[s.root];
        assert_eq!(root.spans, vec![TokenSpan::new(0, 2), TokenSpan::new(7, 10), TokenSpan::new(13, 14)]);
        let relcl = &s.nodes[1];
        assert_eq!(relcl.spans, vec![TokenSpan::new(2, 7)]);
        let a = relcl.attachment.unwrap();
        assert_eq!((q.surface(a.head_token), a.label), ("movie", AttachmentLabel::AclRelcl));
        let acl = &s.nodes[2];
        assert_eq!(acl.spans, vec![TokenSpan::new(10, 13)]);
        let a = acl.attachment.unwrap();
        assert_eq!((q.surface(a.head_token), a.label), ("director", AttachmentLabel::Acl));
    }

    #[test]
    fn no_split_gives_single_root() {
        let q = tokenize("who is the wife of Obama?").unwrap();
        let s = parse_skeleton(&q, &Never).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.attachments().count(), 0);
        assert_eq!(s.nodes[0].spans, vec![TokenSpan::new(0, 7)]);
    }

    #[test]
    fn whole_sentence_span_is_degenerate() {
        let q = tokenize("who is the wife of Obama?").unwrap();
        assert!(matches!(parse_skeleton(&q, &WholeSpan), Err(ParseError::DegenerateSplit(_))));
    }

    #[test]
    fn single_token_question_never_splits() {
        let q = tokenize("Obama").unwrap();
        let s = parse_skeleton(&q, &WholeSpan).unwrap();
        assert_eq!(s.len(), 1);
    }
}
