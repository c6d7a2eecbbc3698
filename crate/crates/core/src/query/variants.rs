use std::collections::HashSet;

use super::iso::canonical_form;
use super::{QueryEdge, QueryError, QueryNode, UngroundedQuery};

/// Upper bound on the variants produced for one query.
pub const MAX_VARIANTS: usize = 64;

fn join_labels(parts: &[&str]) -> String {
    parts.iter().filter(|p| !p.is_empty()).copied().collect::<Vec<_>>().join(" ")
}

/// Merges the two class endpoints of `edge`. The answer node survives,
/// otherwise the lower-numbered one. Edges of the absorbed node move to the
/// survivor with the contracted label, the absorbed surface and their own
/// label joined.
pub fn contract_edge(u: &UngroundedQuery, edge: usize) -> Result<UngroundedQuery, QueryError> {
    let e = u.edges.get(edge).ok_or(QueryError::MissingEdge(edge))?;
    if !(u.nodes[e.a].kind.is_class_like() && u.nodes[e.b].kind.is_class_like()) {
        return Err(QueryError::NotClassEdge(edge));
    }
    let (keep, gone) = if e.a == u.answer || (e.b != u.answer && e.a < e.b) { (e.a, e.b) } else { (e.b, e.a) };
    let shift = |i: usize| if i > gone { i - 1 } else { i };
    let absorbed = &u.nodes[gone];
    let mut nodes: Vec<QueryNode> = Vec::with_capacity(u.nodes.len() - 1);
    for (i, n) in u.nodes.iter().enumerate() {
        if i == gone {
            continue;
        }
        let mut n = n.clone();
        if i == keep {
            n.tokens.extend(&absorbed.tokens);
            n.tokens.sort_unstable();
        }
        nodes.push(n);
    }
    let mut edges = Vec::with_capacity(u.edges.len() - 1);
    for (k, f) in u.edges.iter().enumerate() {
        if k == edge {
            continue;
        }
        let (mut a, mut b, mut label) = (f.a, f.b, f.label.clone());
        if f.touches(gone) {
            label = join_labels(&[&e.label, &absorbed.surface, &f.label]);
            if a == gone {
                a = keep;
            }
            if b == gone {
                b = keep;
            }
        }
        if a == b {
            // a parallel edge between the merged endpoints
            continue;
        }
        edges.push(QueryEdge { a: shift(a), b: shift(b), label });
    }
    Ok(UngroundedQuery { nodes, edges, answer: shift(u.answer) })
}

/// Replaces `edge` by two edges through a fresh mediator node, both carrying
/// the original label. The first keeps the edge's position.
pub fn subdivide_edge(u: &UngroundedQuery, edge: usize) -> Result<UngroundedQuery, QueryError> {
    let e = u.edges.get(edge).ok_or(QueryError::MissingEdge(edge))?.clone();
    let mut v = u.clone();
    let m = v.nodes.len();
    v.nodes.push(QueryNode::mediator());
    v.edges[edge] = QueryEdge { a: e.a, b: m, label: e.label.clone() };
    v.edges.push(QueryEdge { a: m, b: e.b, label: e.label });
    Ok(v)
}

/// Lexicographic `k`-subsets of `0..n`.
fn combinations(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut cur: Option<Vec<usize>> = (k <= n).then(|| (0..k).collect());
    std::iter::from_fn(move || {
        let out = cur.clone()?;
        let next = (0..k).rev().find(|&i| out[i] < n - k + i).map(|i| {
            let mut c = out.clone();
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            c
        });
        cur = next;
        Some(out)
    })
}

/// The query itself followed by its structural variants: at most one
/// contraction of a class-class edge, then subdivision of any subset of the
/// remaining edges. Variants come in order of operation count, contraction
/// choices by edge index, subsets lexicographically; isomorphic duplicates
/// are dropped and the list stops at [`MAX_VARIANTS`].
pub fn enumerate_variants(u: &UngroundedQuery) -> Vec<UngroundedQuery> {
    let mut out = vec![u.clone()];
    let mut seen: HashSet<String> = HashSet::from([canonical_form(u)]);
    let mut bases: Vec<(usize, UngroundedQuery)> = vec![(0, u.clone())];
    for e in 0..u.edges.len() {
        if let Ok(c) = contract_edge(u, e) {
            bases.push((1, c));
        }
    }
    let max_ops = 1 + u.edges.len();
    for ops in 1..=max_ops {
        for (cost, base) in &bases {
            let Some(k) = ops.checked_sub(*cost) else { continue };
            if k > base.edges.len() {
                continue;
            }
            for subset in combinations(base.edges.len(), k) {
                let mut v = base.clone();
                for &e in &subset {
                    v = subdivide_edge(&v, e).expect("edge index in range");
                }
                if seen.insert(canonical_form(&v)) {
                    out.push(v);
                    if out.len() == MAX_VARIANTS {
                        return out;
                    }
                }
            }
        }
    }
    out
}
