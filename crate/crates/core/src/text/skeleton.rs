//! The skeleton tree: text spans connected by attachment relations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Half-open range of original token indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
}

impl TokenSpan {
    pub fn new(start: usize, end: usize) -> Self {
        TokenSpan { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i < self.end
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

/// Groups sorted, distinct token indices into maximal contiguous spans.
pub fn spans_from_tokens(tokens: &[usize]) -> Vec<TokenSpan> {
    let mut spans: Vec<TokenSpan> = Vec::new();
    for &t in tokens {
        match spans.last_mut() {
            Some(last) if last.end == t => last.end += 1,
            _ => spans.push(TokenSpan::new(t, t + 1)),
        }
    }
    spans
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AttachmentLabel {
    Acl,
    AclRelcl,
    Nmod,
    NmodPoss,
    Conj,
    Xcomp,
    Advcl,
}

impl AttachmentLabel {
    pub const ALL: [AttachmentLabel; 7] = [
        AttachmentLabel::Acl,
        AttachmentLabel::AclRelcl,
        AttachmentLabel::Nmod,
        AttachmentLabel::NmodPoss,
        AttachmentLabel::Conj,
        AttachmentLabel::Xcomp,
        AttachmentLabel::Advcl,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AttachmentLabel::Acl => "acl",
            AttachmentLabel::AclRelcl => "acl:relcl",
            AttachmentLabel::Nmod => "nmod",
            AttachmentLabel::NmodPoss => "nmod:poss",
            AttachmentLabel::Conj => "conj",
            AttachmentLabel::Xcomp => "xcomp",
            AttachmentLabel::Advcl => "advcl",
        }
    }

    pub fn index(&self) -> usize {
        Self::ALL.iter().position(|l| l == self).unwrap()
    }
}

impl fmt::Display for AttachmentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown attachment label `{0}`")]
pub struct UnknownLabel(pub String);

impl FromStr for AttachmentLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

impl Serialize for AttachmentLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for AttachmentLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Edge from a parent node's headword to a child node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Attachment {
    pub parent: usize,
    pub head_token: usize,
    pub label: AttachmentLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SkeletonNode {
    /// Disjoint, sorted, maximal runs of original token indices.
    pub spans: Vec<TokenSpan>,
    pub attachment: Option<Attachment>,
}

impl SkeletonNode {
    pub fn tokens(&self) -> impl Iterator<Item = usize> + '_ {
        self.spans.iter().flat_map(|s| s.indices())
    }

    pub fn contains(&self, token: usize) -> bool {
        self.spans.iter().any(|s| s.contains(token))
    }

    pub fn first_token(&self) -> usize {
        self.spans.first().map_or(usize::MAX, |s| s.start)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SkeletonError {
    #[error("skeleton has no nodes")]
    NoNodes,
    #[error("root index {0} out of range")]
    BadRoot(usize),
    #[error("root node carries an attachment")]
    RootAttached,
    #[error("node {0} is neither the root nor attached")]
    Detached(usize),
    #[error("node {0} has an empty or unordered span set")]
    BadSpans(usize),
    #[error("token {token} out of range for {count} tokens")]
    TokenOutOfRange { token: usize, count: usize },
    #[error("token {0} covered by more than one node")]
    Overlap(usize),
    #[error("token {0} not covered by any node")]
    Uncovered(usize),
    #[error("node {node} attaches to missing parent {parent}")]
    BadParent { node: usize, parent: usize },
    #[error("headword {head} of node {node} lies outside its parent span")]
    HeadOutsideParent { node: usize, head: usize },
    #[error("parent links of node {0} form a cycle")]
    Cycle(usize),
}

/// Directed tree of text spans over one question.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Skeleton {
    pub question_id: String,
    pub token_count: usize,
    pub nodes: Vec<SkeletonNode>,
    pub root: usize,
}

impl Skeleton {
    /// A single root node covering the whole question.
    pub fn trivial(question_id: impl Into<String>, token_count: usize) -> Self {
        Skeleton {
            question_id: question_id.into(),
            token_count,
            nodes: vec![SkeletonNode {
                spans: vec![TokenSpan::new(0, token_count)],
                attachment: None,
            }],
            root: 0,
        }
    }

    /// Builds a skeleton from a root token set and child nodes given as
    /// `(tokens, head_token, label)`. Parents are resolved as the node that
    /// owns each head token.
    pub fn from_parts(
        question_id: impl Into<String>,
        token_count: usize,
        root_tokens: &[usize],
        children: &[(Vec<usize>, usize, AttachmentLabel)],
    ) -> Result<Self, SkeletonError> {
        let mut owner = vec![usize::MAX; token_count];
        let mut all: Vec<&[usize]> = vec![root_tokens];
        all.extend(children.iter().map(|(t, _, _)| t.as_slice()));
        for (n, toks) in all.iter().enumerate() {
            for &t in toks.iter() {
                if t >= token_count {
                    return Err(SkeletonError::TokenOutOfRange { token: t, count: token_count });
                }
                if owner[t] != usize::MAX {
                    return Err(SkeletonError::Overlap(t));
                }
                owner[t] = n;
            }
        }
        let mut nodes = Vec::with_capacity(all.len());
        let mut sorted: Vec<usize> = root_tokens.to_vec();
        sorted.sort_unstable();
        nodes.push(SkeletonNode { spans: spans_from_tokens(&sorted), attachment: None });
        for (toks, head, label) in children {
            let mut sorted = toks.clone();
            sorted.sort_unstable();
            let parent = owner.get(*head).copied().unwrap_or(usize::MAX);
            if parent == usize::MAX {
                return Err(SkeletonError::TokenOutOfRange { token: *head, count: token_count });
            }
            nodes.push(SkeletonNode {
                spans: spans_from_tokens(&sorted),
                attachment: Some(Attachment { parent, head_token: *head, label: *label }),
            });
        }
        let skel = Skeleton { question_id: question_id.into(), token_count, nodes, root: 0 }
            .canonical();
        skel.validate()?;
        Ok(skel)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn attachments(&self) -> impl Iterator<Item = (usize, &Attachment)> {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.attachment.as_ref().map(|a| (i, a)))
    }

    pub fn children(&self, node: usize) -> Vec<usize> {
        self.attachments().filter(|(_, a)| a.parent == node).map(|(i, _)| i).collect()
    }

    pub fn depth(&self, node: usize) -> usize {
        let mut d = 0;
        let mut cur = node;
        while let Some(a) = self.nodes[cur].attachment {
            d += 1;
            cur = a.parent;
            if d > self.nodes.len() {
                break;
            }
        }
        d
    }

    /// Number of nodes on the longest root-to-leaf path.
    pub fn height(&self) -> usize {
        (0..self.nodes.len()).map(|i| self.depth(i) + 1).max().unwrap_or(0)
    }

    /// Index of the node whose span set contains `token`.
    pub fn owner(&self, token: usize) -> Option<usize> {
        self.nodes.iter().position(|n| n.contains(token))
    }

    /// Reorders nodes as root first, then by first token, remapping parents.
    pub fn canonical(mut self) -> Self {
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        let root = self.root;
        order.sort_by_key(|&i| (i != root, self.nodes[i].first_token(), i));
        let mut remap = vec![0; self.nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        let mut nodes: Vec<SkeletonNode> = order.iter().map(|&i| self.nodes[i].clone()).collect();
        for n in &mut nodes {
            if let Some(a) = n.attachment.as_mut() {
                if a.parent < remap.len() {
                    a.parent = remap[a.parent];
                }
            }
        }
        self.nodes = nodes;
        self.root = if root < remap.len() { remap[root] } else { root };
        self
    }

    pub fn validate(&self) -> Result<(), SkeletonError> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(SkeletonError::NoNodes);
        }
        if self.root >= n {
            return Err(SkeletonError::BadRoot(self.root));
        }
        let mut cover = vec![false; self.token_count];
        for (i, node) in self.nodes.iter().enumerate() {
            if node.spans.is_empty() {
                return Err(SkeletonError::BadSpans(i));
            }
            for w in node.spans.windows(2) {
                if w[0].end >= w[1].start {
                    return Err(SkeletonError::BadSpans(i));
                }
            }
            for s in &node.spans {
                if s.is_empty() {
                    return Err(SkeletonError::BadSpans(i));
                }
                for t in s.indices() {
                    if t >= self.token_count {
                        return Err(SkeletonError::TokenOutOfRange { token: t, count: self.token_count });
                    }
                    if cover[t] {
                        return Err(SkeletonError::Overlap(t));
                    }
                    cover[t] = true;
                }
            }
            match (&node.attachment, i == self.root) {
                (Some(_), true) => return Err(SkeletonError::RootAttached),
                (None, false) => return Err(SkeletonError::Detached(i)),
                (Some(a), false) => {
                    if a.parent >= n || a.parent == i {
                        return Err(SkeletonError::BadParent { node: i, parent: a.parent });
                    }
                    if !self.nodes[a.parent].contains(a.head_token) {
                        return Err(SkeletonError::HeadOutsideParent { node: i, head: a.head_token });
                    }
                }
                (None, true) => {}
            }
        }
        if let Some(t) = cover.iter().position(|c| !c) {
            return Err(SkeletonError::Uncovered(t));
        }
        for i in 0..n {
            let mut cur = i;
            let mut steps = 0;
            while let Some(a) = self.nodes[cur].attachment {
                cur = a.parent;
                steps += 1;
                if steps > n {
                    return Err(SkeletonError::Cycle(i));
                }
            }
        }
        Ok(())
    }
}
