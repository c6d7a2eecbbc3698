use std::collections::HashSet;
use std::path::Path;

use super::{LiteralType, NodeKind, NodeMention, QueryError};
use crate::text::{split_tokens, Question, TokenSpan};
use crate::words::{is_preposition, is_wh};

/// Entity and class surface forms, stored as lowercased token sequences.
#[derive(Debug, Clone, Default)]
pub struct Lexicons {
    entities: HashSet<Vec<String>>,
    classes: HashSet<Vec<String>>,
    longest: usize,
}

fn key(text: &str) -> Vec<String> {
    split_tokens(text).into_iter().map(|t| t.text.to_lowercase()).collect()
}

impl Lexicons {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_entity(&mut self, alias: &str) {
        let k = key(alias);
        if !k.is_empty() {
            self.longest = self.longest.max(k.len());
            self.entities.insert(k);
        }
    }

    pub fn add_class(&mut self, term: &str) {
        let k = key(term);
        if !k.is_empty() {
            self.longest = self.longest.max(k.len());
            self.classes.insert(k);
        }
    }

    /// Adds one class term per non-empty, non-comment line.
    pub fn add_class_lexicon(&mut self, text: &str) {
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            self.add_class(line);
        }
    }

    pub fn load_class_lexicon(&mut self, path: &Path) -> std::io::Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.add_class_lexicon(&text);
        Ok(())
    }

    fn longest_in(&self, set: &HashSet<Vec<String>>, words: &[String], i: usize) -> usize {
        let max = self.longest.min(words.len() - i);
        (1..=max).rev().find(|&l| set.contains(&words[i..i + l])).unwrap_or(0)
    }
}

fn number_type(tok: &str) -> Option<LiteralType> {
    let digits = tok.chars().filter(char::is_ascii_digit).count();
    let ok = tok.chars().next().is_some_and(|c| c.is_ascii_digit())
        && tok.chars().last().is_some_and(|c| c.is_ascii_digit())
        && tok.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',');
    if !ok {
        None
    } else if digits == 4 && tok.len() == 4 {
        Some(LiteralType::Date)
    } else {
        Some(LiteralType::Number)
    }
}

/// Literal starting at `i`: a quoted string (length includes the quotes) or
/// a number or year token.
fn literal_at(words: &[String], i: usize) -> Option<(usize, LiteralType)> {
    if words[i] == "\"" {
        let close = words[i + 1..].iter().position(|w| w == "\"")?;
        return (close > 0).then_some((close + 2, LiteralType::String));
    }
    number_type(&words[i]).map(|t| (1, t))
}

/// Left-to-right maximal matching of lexicon entries, literals and the
/// question's wh word. The longest match at each position wins; equal
/// lengths prefer wh, then entity, class, literal.
pub fn recognize_nodes(q: &Question, lex: &Lexicons) -> Result<Vec<NodeMention>, QueryError> {
    let words: Vec<String> = (0..q.len()).map(|i| q.lower(i)).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < words.len() {
        // the question word sits at the start, possibly after prepositions
        let wh = is_wh(&words[i]) && words[..i].iter().all(|w| is_preposition(w));
        let ent = lex.longest_in(&lex.entities, &words, i);
        let cls = lex.longest_in(&lex.classes, &words, i);
        let lit = literal_at(&words, i);
        let lit_len = lit.map_or(0, |(l, _)| l);
        let best = ent.max(cls).max(lit_len).max(wh as usize);
        if best == 0 {
            i += 1;
            continue;
        }
        let (kind, len) = if wh && best == 1 {
            (NodeKind::Wh, 1)
        } else if ent == best {
            (NodeKind::Entity, ent)
        } else if cls == best {
            (NodeKind::Class, cls)
        } else {
            (NodeKind::Literal(lit.unwrap().1), lit_len)
        };
        let surface = match kind {
            NodeKind::Literal(LiteralType::String) => q.raw_slice(i + 1, i + len - 1).to_string(),
            _ => q.raw_slice(i, i + len).to_string(),
        };
        out.push(NodeMention { span: TokenSpan::new(i, i + len), kind, surface });
        i += len;
    }
    if !out.iter().any(|m| m.kind.is_class_like()) {
        return Err(QueryError::NoAnswerNode);
    }
    Ok(out)
}
