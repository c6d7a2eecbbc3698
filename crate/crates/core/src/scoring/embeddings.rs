//! Frozen word embedding table loaded from a text file.

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("embedding file declares no vectors")]
    Empty,
}

/// Word vectors of one fixed dimension. Missing words map to the zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<S> {
    dim: usize,
    vectors: HashMap<String, Vec<S>>,
}

impl<S: Scalar> EmbeddingTable<S> {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable { dim, vectors: HashMap::new() }
    }

    pub fn from_pairs<I, W>(dim: usize, pairs: I) -> Self
    where
        I: IntoIterator<Item = (W, Vec<S>)>,
        W: Into<String>,
    {
        let mut t = Self::new(dim);
        for (w, v) in pairs {
            t.insert(w, v);
        }
        t
    }

    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<S>) {
        assert_eq!(vector.len(), self.dim, "embedding dimension mismatch");
        self.vectors.insert(word.into(), vector);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[S]> {
        self.vectors
            .get(word)
            .or_else(|| self.vectors.get(&word.to_lowercase()))
            .map(Vec::as_slice)
    }

    /// The word's vector, or zeros when out of vocabulary.
    pub fn vector(&self, word: &str) -> Vec<S> {
        self.get(word).map_or_else(|| vec![S::zero(); self.dim], <[S]>::to_vec)
    }

    /// Mean vector over all words, counting unknown words as zeros.
    pub fn mean<W: AsRef<str>>(&self, words: &[W]) -> Vec<S> {
        let mut acc = vec![S::zero(); self.dim];
        if words.is_empty() {
            return acc;
        }
        for w in words {
            if let Some(v) = self.get(w.as_ref()) {
                for (a, &x) in acc.iter_mut().zip(v) {
                    *a += x;
                }
            }
        }
        let n = S::from_usize(words.len()).unwrap();
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }

    /// Parses `word v1 … vd` lines. The first line may be a header holding
    /// either `dim` or `count dim`; otherwise the dimension is inferred.
    pub fn parse(text: &str) -> Result<Self, EmbeddingError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).peekable();
        let mut dim = None;
        if let Some(&(_, first)) = lines.peek() {
            let nums: Vec<&str> = first.split_whitespace().collect();
            if (1..=2).contains(&nums.len()) && nums.iter().all(|t| t.parse::<usize>().is_ok()) {
                dim = nums.last().and_then(|t| t.parse().ok());
                lines.next();
            }
        }
        let mut table: Option<Self> = dim.map(Self::new);
        for (no, line) in lines {
            let mut parts = line.split_whitespace();
            let word = parts.next().unwrap();
            let vec: Vec<S> = parts
                .map(|p| p.parse::<f64>().map(S::lit))
                .collect::<Result<_, _>>()
                .map_err(|e| EmbeddingError::Parse { line: no + 1, msg: e.to_string() })?;
            let t = table.get_or_insert_with(|| Self::new(vec.len()));
            if vec.len() != t.dim {
                return Err(EmbeddingError::Parse {
                    line: no + 1,
                    msg: format!("expected {} values, got {}", t.dim, vec.len()),
                });
            }
            t.vectors.insert(word.to_string(), vec);
        }
        table.filter(|t| t.dim > 0).ok_or(EmbeddingError::Empty)
    }

    pub fn load(path: &Path) -> Result<Self, EmbeddingError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| EmbeddingError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }
}
