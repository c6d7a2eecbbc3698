//! Questions, tokenization and the skeleton grammar.

pub mod deps;
pub mod gold;
pub mod las;
pub mod parse;
pub mod skeleton;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use deps::{join_dependencies, DepArc, DependencyTree};
pub use las::{las, LasScore};
pub use parse::{parse_skeleton, WorkingSentence};
pub use skeleton::{Attachment, AttachmentLabel, Skeleton, SkeletonNode, TokenSpan};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TextError {
    #[error("input contains no tokens")]
    EmptyInput,
}

/// One token of a question with its byte range in the raw text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub raw_text: String,
    pub tokens: Vec<Token>,
}

impl Question {
    pub fn new(id: impl Into<String>, raw_text: &str) -> Result<Self, TextError> {
        let tokens = split_tokens(raw_text);
        if tokens.is_empty() {
            return Err(TextError::EmptyInput);
        }
        Ok(Question {
            id: id.into(),
            raw_text: raw_text.to_string(),
            tokens,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surface(&self, i: usize) -> &str {
        &self.tokens[i].text
    }

    pub fn lower(&self, i: usize) -> String {
        self.tokens[i].text.to_lowercase()
    }

    pub fn surfaces(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.text.clone()).collect()
    }

    /// Whether whitespace separates token `i` from its predecessor in the raw text.
    pub fn space_before(&self, i: usize) -> bool {
        i > 0 && self.tokens[i].start > self.tokens[i - 1].end
    }

    /// Raw text covered by the contiguous token range `[start, end)`.
    pub fn raw_slice(&self, start: usize, end: usize) -> &str {
        if start >= end {
            return "";
        }
        &self.raw_text[self.tokens[start].start..self.tokens[end - 1].end]
    }

    /// Surface text of the given token indices joined by single spaces.
    pub fn join(&self, indices: impl IntoIterator<Item = usize>) -> String {
        indices
            .into_iter()
            .map(|i| self.tokens[i].text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Tokenizes `raw_text` into a question with an empty id.
pub fn tokenize(raw_text: &str) -> Result<Question, TextError> {
    Question::new("", raw_text)
}

fn is_connector(c: char) -> bool {
    matches!(c, '.' | '-' | '_' | '\'')
}

fn is_clitic_s(chars: &[(usize, char)], k: usize) -> bool {
    // `'s` followed by a non-word character or the end of input
    chars[k].1 == '\''
        && chars.get(k + 1).is_some_and(|&(_, c)| c == 's' || c == 'S')
        && chars.get(k + 2).is_none_or(|&(_, c)| !c.is_alphanumeric())
}

/// Whitespace and punctuation tokenizer. Punctuation marks become their own
/// tokens, except connectors (`.`, `-`, `_`, `'`) between two word characters
/// and `⟨…⟩` placeholders. A trailing `'s` is split off as a clitic, also
/// after a placeholder.
pub fn split_tokens(raw: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = raw.char_indices().collect();
    let byte_end = |k: usize| chars.get(k).map_or(raw.len(), |&(b, _)| b);
    let mut tokens = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let (start, c) = chars[k];
        if c.is_whitespace() {
            k += 1;
            continue;
        }
        let mut j = k + 1;
        if c == '⟨' {
            if let Some(off) = chars[k..].iter().position(|&(_, c)| c == '⟩') {
                j = k + off + 1;
            }
        } else if c.is_alphanumeric() {
            while j < chars.len() {
                let cj = chars[j].1;
                if cj.is_alphanumeric() {
                    j += 1;
                } else if is_connector(cj)
                    && !is_clitic_s(&chars, j)
                    && chars.get(j + 1).is_some_and(|&(_, n)| n.is_alphanumeric())
                {
                    j += 1;
                } else {
                    break;
                }
            }
        } else if is_clitic_s(&chars, k) && k > 0 && (chars[k - 1].1.is_alphanumeric() || chars[k - 1].1 == '⟩') {
            j = k + 2;
        }
        let end = byte_end(j);
        tokens.push(Token {
            text: raw[start..end].to_string(),
            start,
            end,
        });
        k = j;
    }
    tokens
}
