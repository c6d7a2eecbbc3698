use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Term;
use crate::query::{Lexicons, LiteralType, NodeKind};
use crate::text::split_tokens;
use crate::words::is_wh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Entity,
    Class,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AliasCandidate {
    pub id: String,
    pub kind: LinkKind,
    pub count: u64,
}

#[derive(Debug, Error)]
pub enum AliasError {
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Lowercased alias to candidates sorted by descending popularity.
#[derive(Debug, Clone, Default)]
pub struct AliasDictionary {
    map: HashMap<String, Vec<AliasCandidate>>,
}

/// Lowercased tokens joined by single spaces, so that aliases and question
/// mentions compare equal regardless of spacing around punctuation.
fn normalize(alias: &str) -> String {
    split_tokens(alias).into_iter().map(|t| t.text.to_lowercase()).collect::<Vec<_>>().join(" ")
}

impl AliasDictionary {
    pub fn insert(&mut self, alias: &str, cand: AliasCandidate) {
        let list = self.map.entry(normalize(alias)).or_default();
        if let Some(old) = list.iter_mut().find(|c| c.id == cand.id && c.kind == cand.kind) {
            old.count = old.count.max(cand.count);
        } else {
            list.push(cand);
        }
        list.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.id.cmp(&b.id)));
    }

    /// Parses `alias<TAB>kb_id<TAB>kind<TAB>count` lines.
    pub fn parse(text: &str) -> Result<Self, AliasError> {
        let mut d = AliasDictionary::default();
        for (no, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| AliasError::Parse { line: no + 1, msg: msg.to_string() };
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 4 {
                return Err(err("expected four tab-separated fields"));
            }
            let kind = match f[2].trim() {
                "entity" => LinkKind::Entity,
                "class" => LinkKind::Class,
                _ => return Err(err("kind must be `entity` or `class`")),
            };
            let count = f[3].trim().parse().map_err(|_| err("count must be a non-negative integer"))?;
            if f[0].trim().is_empty() || f[1].trim().is_empty() {
                return Err(err("empty alias or id"));
            }
            d.insert(f[0], AliasCandidate { id: f[1].trim().to_string(), kind, count });
        }
        Ok(d)
    }

    pub fn load(path: &Path) -> Result<Self, AliasError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| AliasError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// All candidates for `alias`, case-insensitively.
    pub fn lookup(&self, alias: &str) -> &[AliasCandidate] {
        self.map.get(&normalize(alias)).map_or(&[], Vec::as_slice)
    }

    /// Top `k` candidates of one kind.
    pub fn top(&self, alias: &str, kind: LinkKind, k: usize) -> Vec<&AliasCandidate> {
        self.lookup(alias).iter().filter(|c| c.kind == kind).take(k).collect()
    }

    /// Adds every alias to the recognizer lexicons under its kind.
    pub fn extend_lexicons(&self, lex: &mut Lexicons) {
        let mut keys: Vec<&String> = self.map.keys().collect();
        keys.sort();
        for k in keys {
            for kind in self.map[k].iter().map(|c| c.kind) {
                match kind {
                    LinkKind::Entity => lex.add_entity(k),
                    LinkKind::Class => lex.add_class(k),
                }
            }
        }
    }
}

/// One way to ground a query node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeOption {
    Const(Term),
    /// A variable, optionally typed by a class id.
    Var { class: Option<String> },
    /// A variable that must bind to a mediator instance.
    Mediator,
}

/// Text of a class-like node with any leading question word removed.
fn class_text(surface: &str) -> String {
    let toks: Vec<String> = split_tokens(surface).into_iter().map(|t| t.text).collect();
    let start = toks.iter().take_while(|t| is_wh(t)).count();
    toks[start..].join(" ")
}

fn normalize_literal(value: &str, ty: LiteralType) -> String {
    match ty {
        LiteralType::Number => value.replace(',', ""),
        _ => value.to_string(),
    }
}

/// Candidate groundings of a node, best first. Entities link through the
/// alias dictionary (possibly to nothing); literals pass through as typed
/// literals; class and wh nodes become variables typed by each linked class,
/// or one untyped variable when no class links.
pub fn link(kind: NodeKind, surface: &str, dict: &AliasDictionary, k: usize) -> Vec<NodeOption> {
    match kind {
        NodeKind::Entity => dict
            .top(surface, LinkKind::Entity, k)
            .into_iter()
            .map(|c| NodeOption::Const(Term::id(&c.id)))
            .collect(),
        NodeKind::Literal(ty) => vec![NodeOption::Const(Term::literal(normalize_literal(surface, ty), ty))],
        NodeKind::Class | NodeKind::Wh => {
            let text = class_text(surface);
            let classes: Vec<NodeOption> = if text.is_empty() {
                Vec::new()
            } else {
                dict.top(&text, LinkKind::Class, k)
                    .into_iter()
                    .map(|c| NodeOption::Var { class: Some(c.id.clone()) })
                    .collect()
            };
            if classes.is_empty() {
                vec![NodeOption::Var { class: None }]
            } else {
                classes
            }
        }
        NodeKind::Mediator => vec![NodeOption::Mediator],
    }
}
