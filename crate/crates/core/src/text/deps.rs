//! Dependency trees over token sequences and the headword-based join of
//! per-span parses into one tree for the whole question.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::skeleton::Skeleton;
use super::Question;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DepArc {
    /// Head token index, `None` for the root.
    pub head: Option<usize>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyTree {
    pub tokens: Vec<String>,
    pub arcs: Vec<DepArc>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DepError {
    #[error("no parse supplied for skeleton node {0}")]
    MissingParse(usize),
    #[error("parse for node {node} has {got} tokens, span has {expected}")]
    CoverageMismatch { node: usize, expected: usize, got: usize },
    #[error("malformed tree: {0}")]
    Malformed(String),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

impl DependencyTree {
    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn root(&self) -> Option<usize> {
        self.arcs.iter().position(|a| a.head.is_none())
    }

    /// Number of non-root arcs.
    pub fn arc_count(&self) -> usize {
        self.arcs.iter().filter(|a| a.head.is_some()).count()
    }

    pub fn validate(&self) -> Result<(), DepError> {
        if self.tokens.len() != self.arcs.len() {
            return Err(DepError::Malformed("token/arc count differ".into()));
        }
        let roots = self.arcs.iter().filter(|a| a.head.is_none()).count();
        if roots != 1 {
            return Err(DepError::Malformed(format!("{roots} roots")));
        }
        let n = self.arcs.len();
        for (i, a) in self.arcs.iter().enumerate() {
            if let Some(h) = a.head {
                if h >= n || h == i {
                    return Err(DepError::Malformed(format!("token {i} has head {h}")));
                }
            }
            let mut cur = i;
            let mut steps = 0;
            while let Some(h) = self.arcs[cur].head {
                cur = h;
                steps += 1;
                if steps > n {
                    return Err(DepError::Malformed(format!("cycle through token {i}")));
                }
            }
        }
        Ok(())
    }

    /// Undirected adjacency lists.
    pub fn neighbours(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.arcs.len()];
        for (i, a) in self.arcs.iter().enumerate() {
            if let Some(h) = a.head {
                adj[i].push(h);
                adj[h].push(i);
            }
        }
        adj
    }

    /// Writes the tree in the four-column tab-separated format.
    pub fn to_conll(&self) -> String {
        let mut out = String::new();
        for (i, (tok, arc)) in self.tokens.iter().zip(&self.arcs).enumerate() {
            let head = arc.head.map_or(0, |h| h + 1);
            out.push_str(&format!("{}\t{}\t{}\t{}\n", i + 1, tok, head, arc.label));
        }
        out
    }
}

/// Parses sentences in the `index<TAB>surface<TAB>head<TAB>label` format,
/// one token per line, blank line between sentences, `#` comments ignored.
pub fn read_conll(text: &str) -> Result<Vec<DependencyTree>, DepError> {
    let mut trees = Vec::new();
    let mut cur = DependencyTree { tokens: vec![], arcs: vec![] };
    let mut flush = |cur: &mut DependencyTree, line: usize| -> Result<(), DepError> {
        if !cur.is_empty() {
            let tree = std::mem::replace(cur, DependencyTree { tokens: vec![], arcs: vec![] });
            tree.validate().map_err(|e| DepError::Syntax { line, msg: e.to_string() })?;
            trees.push(tree);
        }
        Ok(())
    };
    for (no, line) in text.lines().enumerate() {
        let line_no = no + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut cur, line_no)?;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(DepError::Syntax { line: line_no, msg: format!("expected 4 columns, got {}", cols.len()) });
        }
        let bad = |msg: &str| DepError::Syntax { line: line_no, msg: msg.to_string() };
        let idx: usize = cols[0].parse().map_err(|_| bad("bad index"))?;
        if idx != cur.len() + 1 {
            return Err(bad("token indices must count up from 1"));
        }
        let head: usize = cols[2].parse().map_err(|_| bad("bad head"))?;
        cur.tokens.push(cols[1].to_string());
        cur.arcs.push(DepArc { head: head.checked_sub(1), label: cols[3].to_string() });
    }
    let last = text.lines().count() + 1;
    flush(&mut cur, last)?;
    Ok(trees)
}

/// Parses looked up by their lowercased token sequence.
#[derive(Debug, Clone, Default)]
pub struct ParseBank {
    by_text: HashMap<String, DependencyTree>,
}

fn key_of<S: AsRef<str>>(tokens: &[S]) -> String {
    tokens.iter().map(|t| t.as_ref().to_lowercase()).collect::<Vec<_>>().join(" ")
}

impl ParseBank {
    pub fn from_trees(trees: Vec<DependencyTree>) -> Self {
        let by_text = trees.into_iter().map(|t| (key_of(&t.tokens), t)).collect();
        ParseBank { by_text }
    }

    pub fn load(path: &Path) -> Result<Self, DepError> {
        let text = std::fs::read_to_string(path).map_err(|e| DepError::Io(format!("{}: {e}", path.display())))?;
        Ok(Self::from_trees(read_conll(&text)?))
    }

    pub fn get<S: AsRef<str>>(&self, tokens: &[S]) -> Option<&DependencyTree> {
        self.by_text.get(&key_of(tokens))
    }

    pub fn len(&self) -> usize {
        self.by_text.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_text.is_empty()
    }
}

const VERBS: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "am", "has", "have", "had", "do", "does", "did",
    "speak", "speaks", "play", "plays", "write", "wrote", "written", "win", "won", "star", "stars",
    "direct", "directs", "start", "choose", "join", "marry", "live", "lives", "founded", "born",
    "die", "died", "want", "make", "made", "go", "went", "lead", "leads", "sing", "sang",
];

/// Crude verb test used only by the fallback parser.
pub fn is_verb_like(word: &str) -> bool {
    let w = word.to_lowercase();
    VERBS.contains(&w.as_str())
        || (w.len() > 4 && (w.ends_with("ed") || w.ends_with("ing")) && w.chars().all(char::is_alphabetic))
}

/// Every token heads to the last verb-like token, else to the last token.
pub fn fallback_parse<S: AsRef<str>>(tokens: &[S]) -> DependencyTree {
    let n = tokens.len();
    let root = tokens
        .iter()
        .rposition(|t| is_verb_like(t.as_ref()))
        .unwrap_or(n.saturating_sub(1));
    let arcs = (0..n)
        .map(|i| {
            if i == root {
                DepArc { head: None, label: "root".into() }
            } else {
                DepArc { head: Some(root), label: "dep".into() }
            }
        })
        .collect();
    DependencyTree { tokens: tokens.iter().map(|t| t.as_ref().to_string()).collect(), arcs }
}

/// Per-node parses from `bank` when present, otherwise the fallback parse.
pub fn span_parses(q: &Question, skel: &Skeleton, bank: Option<&ParseBank>) -> BTreeMap<usize, DependencyTree> {
    skel.nodes
        .iter()
        .enumerate()
        .map(|(i, node)| {
            let toks: Vec<String> = node.tokens().map(|t| q.surface(t).to_string()).collect();
            let tree = bank.and_then(|b| b.get(&toks)).cloned().unwrap_or_else(|| fallback_parse(&toks));
            (i, tree)
        })
        .collect()
}

/// Joins per-node parses into one tree over all question tokens: the root of
/// each child span's parse hangs from the node's headword with the node's
/// attachment label; arcs inside spans are kept.
pub fn join_dependencies(
    skel: &Skeleton,
    parses: &BTreeMap<usize, DependencyTree>,
    tokens: &[String],
) -> Result<DependencyTree, DepError> {
    let n = skel.token_count;
    let mut arcs: Vec<Option<DepArc>> = vec![None; n];
    for (i, node) in skel.nodes.iter().enumerate() {
        let parse = parses.get(&i).ok_or(DepError::MissingParse(i))?;
        let originals: Vec<usize> = node.tokens().collect();
        if parse.len() != originals.len() {
            return Err(DepError::CoverageMismatch { node: i, expected: originals.len(), got: parse.len() });
        }
        parse.validate()?;
        for (local, arc) in parse.arcs.iter().enumerate() {
            let joined = match (arc.head, node.attachment) {
                (Some(h), _) => DepArc { head: Some(originals[h]), label: arc.label.clone() },
                (None, Some(att)) => DepArc { head: Some(att.head_token), label: att.label.as_str().to_string() },
                (None, None) => arc.clone(),
            };
            arcs[originals[local]] = Some(joined);
        }
    }
    let arcs: Vec<DepArc> = arcs
        .into_iter()
        .enumerate()
        .map(|(t, a)| a.ok_or_else(|| DepError::Malformed(format!("token {t} uncovered"))))
        .collect::<Result<_, _>>()?;
    let tree = DependencyTree { tokens: tokens.to_vec(), arcs };
    tree.validate()?;
    Ok(tree)
}
