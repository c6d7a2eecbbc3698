use std::collections::BTreeSet;

use thiserror::Error;

use crate::kb::{GroundedQuery, PatternTerm, TYPE_PREDICATE};
use crate::query::{NodeKind, NodeMention};
use crate::text::Question;
use crate::words::is_content;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("no content words remain")]
pub struct EmptyBag;

/// Lowercased content words, deduplicated and kept in sorted order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WordBag(BTreeSet<String>);

impl WordBag {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(words: I) -> Result<Self, EmptyBag> {
        let set: BTreeSet<String> = words.into_iter().map(Into::into).collect();
        if set.is_empty() {
            Err(EmptyBag)
        } else {
            Ok(WordBag(set))
        }
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Question tokens outside entity mentions, minus stopwords and punctuation.
pub fn question_bag(q: &Question, mentions: &[NodeMention]) -> Result<WordBag, EmptyBag> {
    let inside = |i: usize| mentions.iter().any(|m| m.kind == NodeKind::Entity && m.span.contains(i));
    WordBag::new((0..q.len()).filter(|&i| !inside(i)).map(|i| q.lower(i)).filter(|w| is_content(w)))
}

/// Splits an id on `.`, `_` and lowercase-to-uppercase boundaries.
pub fn split_identifier(id: &str) -> Vec<String> {
    let mut out = Vec::new();
    for piece in id.split(['.', '_', '-', '/']) {
        let mut cur = String::new();
        let mut prev_lower = false;
        for c in piece.chars() {
            if c.is_uppercase() && prev_lower && !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            prev_lower = c.is_lowercase() || c.is_ascii_digit();
            cur.extend(c.to_lowercase());
        }
        if !cur.is_empty() {
            out.push(cur);
        }
    }
    out
}

/// Words of the relation predicates plus the ids of constraining classes.
pub fn query_bag(g: &GroundedQuery) -> Result<WordBag, EmptyBag> {
    let mut words = Vec::new();
    for p in &g.patterns {
        if p.p == TYPE_PREDICATE {
            if let PatternTerm::Const(c) = &p.o {
                words.extend(c.as_id().map(split_identifier).unwrap_or_default());
            }
        } else {
            words.extend(split_identifier(&p.p));
        }
    }
    WordBag::new(words.into_iter().filter(|w| is_content(w)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{Provenance, TriplePattern};
    use crate::text::TokenSpan;

    #[test]
    fn running_example_bag() {
        let q = Question::new("re", "what movie that Miley Cyrus acted in had a director named Tom Vaughan?").unwrap();
        let m = |s, e| NodeMention { span: TokenSpan::new(s, e), kind: NodeKind::Entity, surface: String::new() };
        let bag = question_bag(&q, &[m(3, 5), m(11, 13)]).unwrap();
        assert_eq!(bag.words().collect::<Vec<_>>(), ["acted", "director", "movie", "named"]);
    }

    #[test]
    fn predicate_split() {
        assert_eq!(split_identifier("film.performance.actor"), ["film", "performance", "actor"]);
        assert_eq!(split_identifier("people.person.placeOfBirth"), ["people", "person", "place", "of", "birth"]);
        let g = GroundedQuery {
            patterns: vec![
                TriplePattern::new(PatternTerm::var("?x"), "film.film.directed_by", PatternTerm::id("m.1")),
                TriplePattern::new(PatternTerm::var("?x"), TYPE_PREDICATE, PatternTerm::id("film.film")),
            ],
            answer_var: "?x".into(),
            mediator_vars: vec![],
            provenance: Provenance::Variant(0),
        };
        assert_eq!(query_bag(&g).unwrap().words().collect::<Vec<_>>(), ["directed", "film"]);
    }

    #[test]
    fn only_stopwords_and_entities() {
        let q = Question::new("t", "what about Tom?").unwrap();
        let m = NodeMention { span: TokenSpan::new(2, 3), kind: NodeKind::Entity, surface: "Tom".into() };
        assert_eq!(question_bag(&q, &[m]), Err(EmptyBag));
    }
}
