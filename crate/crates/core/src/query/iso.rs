//! Canonical forms of labeled query graphs, used to drop isomorphic variants.

use std::collections::BTreeMap;

use super::UngroundedQuery;

/// Above this many tie-breaking permutations the general canonical form
/// settles for the refined colour order.
const PERMUTATION_BUDGET: usize = 40_320;

fn node_label(u: &UngroundedQuery, i: usize) -> String {
    let n = &u.nodes[i];
    let answer = if i == u.answer { "*" } else { "" };
    format!("{}{}{}", n.kind, answer, serde_json::to_string(&n.surface.to_lowercase()).unwrap())
}

fn edge_label(label: &str) -> String {
    serde_json::to_string(label).unwrap()
}

/// A string equal for two queries exactly when they are isomorphic as
/// graphs with node kinds, surfaces, answer marks and edge labels.
pub fn canonical_form(u: &UngroundedQuery) -> String {
    let n = u.nodes.len();
    if n > 0 && u.edges.len() + 1 == n && u.is_connected() {
        tree_form(u)
    } else {
        general_form(u)
    }
}

fn adjacency(u: &UngroundedQuery) -> Vec<Vec<(usize, String)>> {
    let mut adj = vec![Vec::new(); u.nodes.len()];
    for e in &u.edges {
        adj[e.a].push((e.b, edge_label(&e.label)));
        adj[e.b].push((e.a, edge_label(&e.label)));
    }
    adj
}

fn rooted(u: &UngroundedQuery, adj: &[Vec<(usize, String)>], v: usize, parent: Option<usize>) -> String {
    let mut kids: Vec<String> = adj[v]
        .iter()
        .filter(|(w, _)| Some(*w) != parent)
        .map(|(w, l)| format!("{l}:{}", rooted(u, adj, *w, Some(v))))
        .collect();
    kids.sort();
    format!("({}[{}])", node_label(u, v), kids.join(","))
}

/// Rooted encoding at the tree's centre, minimised over two centres.
fn tree_form(u: &UngroundedQuery) -> String {
    let n = u.nodes.len();
    let adj = adjacency(u);
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut layer: Vec<usize> = (0..n).filter(|&v| degree[v] <= 1).collect();
    let mut left = n;
    while left > 2 {
        left -= layer.len();
        let mut next = Vec::new();
        for &v in &layer {
            for (w, _) in &adj[v] {
                degree[*w] -= 1;
                if degree[*w] == 1 {
                    next.push(*w);
                }
            }
        }
        layer = next;
    }
    let form = layer.iter().map(|&c| rooted(u, &adj, c, None)).min().unwrap();
    format!("T{form}")
}

fn general_form(u: &UngroundedQuery) -> String {
    let n = u.nodes.len();
    let adj = adjacency(u);
    // colour refinement
    let mut colour: Vec<String> = (0..n).map(|i| node_label(u, i)).collect();
    for _ in 0..n {
        let sig: Vec<String> = (0..n)
            .map(|v| {
                let mut nb: Vec<String> = adj[v].iter().map(|(w, l)| format!("{l}>{}", colour[*w])).collect();
                nb.sort();
                format!("{}|{}", colour[v], nb.join(","))
            })
            .collect();
        let mut ranks: Vec<&String> = sig.iter().collect();
        ranks.sort();
        ranks.dedup();
        let next: Vec<String> = sig
            .iter()
            .map(|s| format!("{:06}", ranks.binary_search(&s).unwrap()))
            .collect();
        let stable = classes(&next).len() == classes(&colour).len();
        colour = next;
        if stable {
            break;
        }
    }
    let groups = classes(&colour);
    let budget: usize = groups.values().map(|g| (1..=g.len()).product::<usize>()).try_fold(1usize, |a, b| a.checked_mul(b)).unwrap_or(usize::MAX);
    let mut best: Option<String> = None;
    let blocks: Vec<Vec<usize>> = groups.into_values().collect();
    if budget > PERMUTATION_BUDGET {
        log::warn!("canonical form over {budget} permutations skipped, using refined order");
        let order: Vec<usize> = blocks.concat();
        return encode(u, &order);
    }
    let mut order = Vec::with_capacity(n);
    permute_blocks(&blocks, 0, &mut order, &mut |ord| {
        let e = encode(u, ord);
        if best.as_ref().is_none_or(|b| e < *b) {
            best = Some(e);
        }
    });
    best.unwrap_or_else(|| "G".into())
}

fn classes(colour: &[String]) -> BTreeMap<&String, Vec<usize>> {
    let mut m: BTreeMap<&String, Vec<usize>> = BTreeMap::new();
    for (i, c) in colour.iter().enumerate() {
        m.entry(c).or_default().push(i);
    }
    m
}

fn permute_blocks(blocks: &[Vec<usize>], k: usize, order: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if k == blocks.len() {
        f(order);
        return;
    }
    let mut block = blocks[k].clone();
    let len = block.len();
    heap_permutations(&mut block, len, &mut |perm| {
        let mark = order.len();
        order.extend_from_slice(perm);
        permute_blocks(blocks, k + 1, order, f);
        order.truncate(mark);
    });
}

fn heap_permutations(items: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k <= 1 {
        f(items);
        return;
    }
    for i in 0..k {
        heap_permutations(items, k - 1, f);
        let j = if k % 2 == 0 { i } else { 0 };
        items.swap(j, k - 1);
    }
}

/// Encoding of the graph under a node order: node labels in order, then
/// the sorted edge list over positions.
fn encode(u: &UngroundedQuery, order: &[usize]) -> String {
    let mut pos = vec![0; order.len()];
    for (p, &v) in order.iter().enumerate() {
        pos[v] = p;
    }
    let labels: Vec<String> = order.iter().map(|&v| node_label(u, v)).collect();
    let mut edges: Vec<(usize, usize, String)> = u
        .edges
        .iter()
        .map(|e| {
            let (a, b) = (pos[e.a].min(pos[e.b]), pos[e.a].max(pos[e.b]));
            (a, b, edge_label(&e.label))
        })
        .collect();
    edges.sort();
    format!("G{}|{:?}", labels.join(","), edges)
}
