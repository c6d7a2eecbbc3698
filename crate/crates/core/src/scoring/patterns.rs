//! Question and query patterns, and the bank mined from training pairs.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kb::{GroundedQuery, PatternTerm, Provenance, Term, TriplePattern};
use crate::query::{NodeKind, NodeMention};
use crate::text::{split_tokens, Question};

pub fn dummy_token(i: usize) -> String {
    format!("⟨E{i}⟩")
}

pub fn placeholder(i: usize) -> String {
    format!("⟨P{i}⟩")
}

fn placeholder_index(id: &str) -> Option<usize> {
    id.strip_prefix("⟨P")?.strip_suffix('⟩')?.parse().ok()
}

/// A question with each entity mention replaced by `⟨Ek⟩`, numbered left to
/// right from 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionPattern {
    text: String,
    tokens: Vec<String>,
    dummies: usize,
}

impl QuestionPattern {
    /// Re-reads a rendered pattern.
    pub fn from_text(text: &str) -> Self {
        let tokens: Vec<String> = split_tokens(text).into_iter().map(|t| t.text).collect();
        let dummies = tokens.iter().filter(|t| t.starts_with("⟨E")).count();
        QuestionPattern { text: text.to_string(), tokens, dummies }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn dummy_count(&self) -> usize {
        self.dummies
    }
}

impl fmt::Display for QuestionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Replaces entity mentions (mentions of other kinds are kept verbatim),
/// preserving the original spacing.
pub fn question_pattern(q: &Question, mentions: &[NodeMention]) -> QuestionPattern {
    let mut ents: Vec<&NodeMention> = mentions.iter().filter(|m| m.kind == NodeKind::Entity).collect();
    ents.sort_by_key(|m| m.span.start);
    let mut text = String::new();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut next = ents.iter().peekable();
    while i < q.len() {
        if q.space_before(i) {
            text.push(' ');
        }
        match next.peek() {
            Some(m) if m.span.start == i => {
                let t = dummy_token(tokens.iter().filter(|t: &&String| t.starts_with("⟨E")).count() + 1);
                text.push_str(&t);
                tokens.push(t);
                i = m.span.end;
                next.next();
            }
            _ => {
                text.push_str(q.surface(i));
                tokens.push(q.surface(i).to_string());
                i += 1;
            }
        }
    }
    let dummies = ents.len();
    QuestionPattern { text, tokens, dummies }
}

/// A grounded query with the entities aligned to dummy tokens replaced by
/// `⟨Pk⟩` placeholder ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryPattern {
    pub query: GroundedQuery,
}

impl QueryPattern {
    /// Abstracts `entities[k]` to placeholder `k+1`. None when some entity
    /// does not occur in the query.
    pub fn abstract_query(g: &GroundedQuery, entities: &[String]) -> Option<Self> {
        let consts = g.constants();
        if !entities.iter().all(|e| consts.iter().any(|c| c.as_id() == Some(e))) {
            return None;
        }
        let map = |t: &PatternTerm| match t {
            PatternTerm::Const(Term::Id(id)) => match entities.iter().position(|e| e == id) {
                Some(k) => PatternTerm::id(placeholder(k + 1)),
                None => t.clone(),
            },
            _ => t.clone(),
        };
        let mut query = g.clone();
        for p in &mut query.patterns {
            *p = TriplePattern::new(map(&p.s), p.p.clone(), map(&p.o));
        }
        Some(QueryPattern { query })
    }

    pub fn placeholder_count(&self) -> usize {
        let mut seen: Vec<usize> = self
            .query
            .constants()
            .into_iter()
            .filter_map(|c| c.as_id().and_then(placeholder_index))
            .collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    /// Substitutes placeholder `k` by `entities[k-1]`. None on a missing index.
    pub fn instantiate(&self, entities: &[Term], provenance: Provenance) -> Option<GroundedQuery> {
        let map = |t: &PatternTerm| -> Option<PatternTerm> {
            match t {
                PatternTerm::Const(Term::Id(id)) => match placeholder_index(id) {
                    Some(k) => entities.get(k.checked_sub(1)?).cloned().map(PatternTerm::Const),
                    None => Some(t.clone()),
                },
                _ => Some(t.clone()),
            }
        };
        let mut g = self.query.clone();
        for p in &mut g.patterns {
            *p = TriplePattern::new(map(&p.s)?, p.p.clone(), map(&p.o)?);
        }
        g.provenance = provenance;
        Some(g)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BankEntry {
    pub question_pattern: QuestionPattern,
    pub query_pattern: QueryPattern,
    pub entities: Vec<String>,
}

#[derive(Debug, Error)]
pub enum BankError {
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Serialize, Deserialize)]
struct BankLine {
    question_pattern: String,
    query_pattern_triples: Vec<[String; 3]>,
    answer_var: String,
    #[serde(default)]
    mediator_vars: Vec<String>,
    entities: Vec<String>,
}

fn term_from_str(s: &str) -> Result<PatternTerm, String> {
    if s.starts_with('?') {
        Ok(PatternTerm::var(s))
    } else {
        Term::parse(s).map(PatternTerm::Const)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PatternBank {
    pub entries: Vec<BankEntry>,
}

impl PatternBank {
    /// Adds a training pair; `entities` are the ids of the question's entity
    /// mentions in order. Pairs whose entities do not all occur in the query
    /// are rejected. The stored query's provenance becomes the entry index.
    pub fn add(&mut self, pattern: QuestionPattern, query: &GroundedQuery, entities: Vec<String>) -> bool {
        if pattern.dummy_count() != entities.len() {
            return false;
        }
        match QueryPattern::abstract_query(query, &entities) {
            Some(mut qp) => {
                qp.query.provenance = Provenance::PatternBank(self.entries.len());
                self.entries.push(BankEntry { question_pattern: pattern, query_pattern: qp, entities });
                true
            }
            None => false,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for e in &self.entries {
            let q = &e.query_pattern.query;
            let line = BankLine {
                question_pattern: e.question_pattern.text().to_string(),
                query_pattern_triples: q.patterns.iter().map(|p| [p.s.to_string(), p.p.clone(), p.o.to_string()]).collect(),
                answer_var: q.answer_var.clone(),
                mediator_vars: q.mediator_vars.clone(),
                entities: e.entities.clone(),
            };
            serde_json::to_writer(&mut w, &line)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, BankError> {
        let mut bank = PatternBank::default();
        for (no, line) in r.lines().enumerate() {
            let line = line.map_err(|source| BankError::Io { path: "<reader>".into(), source })?;
            if line.trim().is_empty() {
                continue;
            }
            let err = |msg: String| BankError::Parse { line: no + 1, msg };
            let b: BankLine = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
            let mut patterns = Vec::new();
            for [s, p, o] in &b.query_pattern_triples {
                patterns.push(TriplePattern::new(term_from_str(s).map_err(err)?, p.clone(), term_from_str(o).map_err(err)?));
            }
            let query = GroundedQuery {
                patterns,
                answer_var: b.answer_var,
                mediator_vars: b.mediator_vars,
                provenance: Provenance::PatternBank(bank.entries.len()),
            };
            let entry = BankEntry {
                question_pattern: QuestionPattern::from_text(&b.question_pattern),
                query_pattern: QueryPattern { query },
                entities: b.entities,
            };
            if entry.query_pattern.placeholder_count() != entry.question_pattern.dummy_count() {
                return Err(err("placeholder count differs from dummy-token count".into()));
            }
            bank.entries.push(entry);
        }
        Ok(bank)
    }

    pub fn save(&self, path: &Path) -> Result<(), BankError> {
        let io = |source| BankError::Io { path: path.display().to_string(), source };
        let f = std::fs::File::create(path).map_err(io)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_jsonl(&mut w).map_err(io)?;
        w.flush().map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self, BankError> {
        let f = std::fs::File::open(path).map_err(|source| BankError::Io { path: path.display().to_string(), source })?;
        Self::read_jsonl(std::io::BufReader::new(f))
    }
}
