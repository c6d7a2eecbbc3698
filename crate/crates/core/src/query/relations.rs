use std::collections::VecDeque;

use super::{NodeKind, NodeMention, QueryEdge, QueryError, QueryNode, UngroundedQuery};
use crate::text::DependencyTree;
use crate::words::is_content;

/// Merges a wh word directly followed by a class mention ("what movie").
fn merge_wh_class(mentions: &[NodeMention]) -> Vec<QueryNode> {
    let mut nodes: Vec<QueryNode> = Vec::new();
    let mut i = 0;
    while i < mentions.len() {
        let m = &mentions[i];
        let tokens: Vec<usize> = m.span.indices().collect();
        if m.kind == NodeKind::Wh {
            if let Some(next) = mentions.get(i + 1).filter(|n| n.kind == NodeKind::Class && n.span.start == m.span.end) {
                nodes.push(QueryNode {
                    kind: NodeKind::Wh,
                    surface: format!("{} {}", m.surface, next.surface),
                    tokens: (m.span.start..next.span.end).collect(),
                });
                i += 2;
                continue;
            }
        }
        nodes.push(QueryNode { kind: m.kind, surface: m.surface.clone(), tokens });
        i += 1;
    }
    nodes
}

struct Path {
    len: usize,
    interior: Vec<usize>,
}

/// Shortest token path from node `i` to node `j` that avoids every other
/// node's tokens.
fn shortest_path(adj: &[Vec<usize>], owner: &[Option<usize>], from: &[usize], i: usize, j: usize) -> Option<Path> {
    let n = adj.len();
    let mut prev: Vec<Option<usize>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for &s in from {
        seen[s] = true;
        queue.push_back(s);
    }
    while let Some(v) = queue.pop_front() {
        if owner[v] == Some(j) {
            let mut interior = Vec::new();
            let mut cur = prev[v];
            let mut len = 1;
            while let Some(c) = cur {
                if owner[c] == Some(i) {
                    break;
                }
                interior.push(c);
                cur = prev[c];
                len += 1;
            }
            interior.reverse();
            return Some(Path { len, interior });
        }
        for &w in &adj[v] {
            let passable = match owner[w] {
                None => true,
                Some(o) => o == j,
            };
            if !seen[w] && passable {
                seen[w] = true;
                prev[w] = Some(v);
                queue.push_back(w);
            }
        }
    }
    None
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    parent[x] = r;
    r
}

/// Builds the ungrounded query from the question's dependency tree.
///
/// Every node pair joined by a dependency path that avoids the other nodes
/// is a candidate edge labeled with the path's content words. A minimum
/// spanning tree over path length is kept, preferring edges at the answer
/// node and then lower node indices on ties.
pub fn extract_relations(dep: &DependencyTree, mentions: &[NodeMention]) -> Result<UngroundedQuery, QueryError> {
    let nodes = merge_wh_class(mentions);
    let n_tok = dep.tokens.len();
    let mut owner = vec![None; n_tok];
    for (k, node) in nodes.iter().enumerate() {
        for &t in &node.tokens {
            let slot = owner.get_mut(t).ok_or_else(|| QueryError::Invalid(format!("token {t} outside the parse")))?;
            if slot.is_some() {
                return Err(QueryError::Invalid(format!("token {t} in two mentions")));
            }
            *slot = Some(k);
        }
    }
    let answer = nodes
        .iter()
        .position(|n| n.kind == NodeKind::Wh)
        .or_else(|| nodes.iter().position(|n| n.kind == NodeKind::Class))
        .ok_or(QueryError::NoAnswerNode)?;

    let mut adj = dep.neighbours();
    adj.iter_mut().for_each(|a| a.sort_unstable());
    let mut candidates = Vec::new();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if let Some(p) = shortest_path(&adj, &owner, &nodes[i].tokens, i, j) {
                let label: Vec<String> = p
                    .interior
                    .iter()
                    .map(|&t| dep.tokens[t].to_lowercase())
                    .filter(|w| is_content(w))
                    .collect();
                let at_answer = i == answer || j == answer;
                candidates.push(((p.len, !at_answer, i, j), label.join(" ")));
            }
        }
    }
    candidates.sort();

    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    let mut edges = Vec::new();
    for ((_, _, i, j), label) in candidates {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri] = rj;
            edges.push(QueryEdge { a: i, b: j, label });
        }
    }
    let q = UngroundedQuery { nodes, edges, answer };
    if !q.is_connected() {
        return Err(QueryError::DisconnectedGraph);
    }
    Ok(q)
}
