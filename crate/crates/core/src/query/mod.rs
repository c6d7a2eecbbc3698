//! Ungrounded query graphs: node recognition, relation extraction over a
//! dependency tree, and structural variants.

mod iso;
mod recognize;
mod relations;
mod variants;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::TokenSpan;

pub use iso::canonical_form;
pub use recognize::{recognize_nodes, Lexicons};
pub use relations::extract_relations;
pub use variants::{contract_edge, enumerate_variants, subdivide_edge, MAX_VARIANTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LiteralType {
    String,
    Number,
    Date,
}

impl LiteralType {
    pub fn as_str(&self) -> &'static str {
        match self {
            LiteralType::String => "string",
            LiteralType::Number => "number",
            LiteralType::Date => "date",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Entity,
    Class,
    Literal(LiteralType),
    Wh,
    Mediator,
}

impl NodeKind {
    /// Class-like nodes may be merged by contraction.
    pub fn is_class_like(&self) -> bool {
        matches!(self, NodeKind::Class | NodeKind::Wh)
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Entity => f.write_str("entity"),
            NodeKind::Class => f.write_str("class"),
            NodeKind::Literal(t) => write!(f, "literal:{}", t.as_str()),
            NodeKind::Wh => f.write_str("wh"),
            NodeKind::Mediator => f.write_str("mediator"),
        }
    }
}

/// A recognized mention in the question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMention {
    pub span: TokenSpan,
    pub kind: NodeKind,
    /// Surface text; for quoted literals, the text between the quotes.
    pub surface: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryNode {
    pub kind: NodeKind,
    pub surface: String,
    /// Question tokens covered by the node, empty for mediators.
    pub tokens: Vec<usize>,
}

impl QueryNode {
    pub fn mediator() -> Self {
        QueryNode { kind: NodeKind::Mediator, surface: String::new(), tokens: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryEdge {
    pub a: usize,
    pub b: usize,
    /// Content words along the connecting dependency path.
    pub label: String,
}

impl QueryEdge {
    pub fn touches(&self, n: usize) -> bool {
        self.a == n || self.b == n
    }

    pub fn other(&self, n: usize) -> usize {
        if self.a == n {
            self.b
        } else {
            self.a
        }
    }
}

/// KB-independent query graph with one answer node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UngroundedQuery {
    pub nodes: Vec<QueryNode>,
    pub edges: Vec<QueryEdge>,
    pub answer: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("no wh word or class mention to serve as the answer node")]
    NoAnswerNode,
    #[error("query graph is disconnected")]
    DisconnectedGraph,
    #[error("edge {0} does not join two class nodes")]
    NotClassEdge(usize),
    #[error("no edge {0}")]
    MissingEdge(usize),
    #[error("invalid query graph: {0}")]
    Invalid(String),
}

impl UngroundedQuery {
    pub fn degree(&self, n: usize) -> usize {
        self.edges.iter().filter(|e| e.touches(n)).count()
    }

    pub fn mediator_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Mediator).count()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.nodes.len();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for e in self.edges.iter().filter(|e| e.touches(v)) {
                let w = e.other(v);
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn validate(&self) -> Result<(), QueryError> {
        if self.answer >= self.nodes.len() {
            return Err(QueryError::Invalid(format!("answer node {} out of range", self.answer)));
        }
        if let Some(e) = self.edges.iter().find(|e| e.a == e.b || e.a >= self.nodes.len() || e.b >= self.nodes.len()) {
            return Err(QueryError::Invalid(format!("bad edge {}-{}", e.a, e.b)));
        }
        if !self.is_connected() {
            return Err(QueryError::DisconnectedGraph);
        }
        Ok(())
    }

    /// Compact single-line rendering, mostly for logs and traces.
    pub fn describe(&self) -> String {
        let node = |i: usize| {
            let n = &self.nodes[i];
            let star = if i == self.answer { "*" } else { "" };
            match n.kind {
                NodeKind::Mediator => format!("[m{i}]{star}"),
                k => format!("[{k} {}]{star}", n.surface),
            }
        };
        if self.edges.is_empty() {
            return node(self.answer);
        }
        self.edges
            .iter()
            .map(|e| format!("{} -{}- {}", node(e.a), e.label, node(e.b)))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn node(kind: NodeKind, surface: &str) -> QueryNode {
        QueryNode { kind, surface: surface.into(), tokens: Vec::new() }
    }

    pub fn edge(a: usize, b: usize, label: &str) -> QueryEdge {
        QueryEdge { a, b, label: label.into() }
    }

    /// what movie -acted- Miley Cyrus; what movie -had- director -named- Tom Vaughan
    pub fn running() -> UngroundedQuery {
        UngroundedQuery {
            nodes: vec![
                node(NodeKind::Wh, "what movie"),
                node(NodeKind::Entity, "Miley Cyrus"),
                node(NodeKind::Class, "director"),
                node(NodeKind::Entity, "Tom Vaughan"),
            ],
            edges: vec![edge(0, 1, "acted"), edge(0, 2, "had"), edge(2, 3, "named")],
            answer: 0,
        }
    }
}
