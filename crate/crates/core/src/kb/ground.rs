use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::alias::{link, AliasDictionary, NodeOption};
use super::{Term, TripleStore, TYPE_PREDICATE};
use crate::query::{NodeKind, UngroundedQuery};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundLimits {
    pub max_link_candidates: usize,
    pub max_grounded: usize,
}

impl Default for GroundLimits {
    fn default() -> Self {
        GroundLimits { max_link_candidates: 10, max_grounded: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PatternTerm {
    Var(String),
    Const(Term),
}

impl PatternTerm {
    pub fn var(name: impl Into<String>) -> Self {
        PatternTerm::Var(name.into())
    }

    pub fn id(id: impl Into<String>) -> Self {
        PatternTerm::Const(Term::id(id))
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Const(_) => None,
        }
    }
}

impl fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Var(v) => f.write_str(v),
            PatternTerm::Const(t) => t.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TriplePattern {
    pub s: PatternTerm,
    pub p: String,
    pub o: PatternTerm,
}

impl TriplePattern {
    pub fn new(s: PatternTerm, p: impl Into<String>, o: PatternTerm) -> Self {
        TriplePattern { s, p: p.into(), o }
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {} {})", self.s, self.p, self.o)
    }
}

/// Where a grounded query came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    /// Index into the structural variants of the question's query.
    Variant(usize),
    /// Instantiated from a pattern-bank entry.
    PatternBank(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundedQuery {
    pub patterns: Vec<TriplePattern>,
    pub answer_var: String,
    /// Variables that only bind to mediator instances.
    pub mediator_vars: Vec<String>,
    pub provenance: Provenance,
}

impl GroundedQuery {
    /// Distinct variables in order of first occurrence.
    pub fn variables(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for p in &self.patterns {
            for v in [p.s.as_var(), p.o.as_var()].into_iter().flatten() {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }

    /// Patterns excluding class constraints.
    pub fn relation_patterns(&self) -> impl Iterator<Item = &TriplePattern> {
        self.patterns.iter().filter(|p| p.p != TYPE_PREDICATE)
    }

    pub fn is_valid(&self) -> bool {
        self.variables().contains(&self.answer_var.as_str())
    }

    /// Renaming-invariant key: variables are renamed by first occurrence
    /// after sorting patterns with variables blanked, answer variable first.
    pub fn canonical_key(&self) -> String {
        let blank = |t: &PatternTerm| match t {
            PatternTerm::Var(v) if *v == self.answer_var => "?A".to_string(),
            PatternTerm::Var(v) if self.mediator_vars.contains(v) => "?M".to_string(),
            PatternTerm::Var(_) => "?".to_string(),
            PatternTerm::Const(c) => c.to_string(),
        };
        let mut pats: Vec<&TriplePattern> = self.patterns.iter().collect();
        pats.sort_by_key(|p| (blank(&p.s), p.p.clone(), blank(&p.o)));
        let mut names: BTreeMap<String, String> = BTreeMap::new();
        names.insert(self.answer_var.clone(), "?a".into());
        let mut name = |t: &PatternTerm| -> String {
            match t {
                PatternTerm::Var(v) => {
                    let n = names.len();
                    names.entry(v.clone()).or_insert_with(|| format!("?{n}")).clone()
                }
                PatternTerm::Const(c) => c.to_string(),
            }
        };
        let parts: Vec<String> = pats.iter().map(|p| format!("({} {} {})", name(&p.s), p.p, name(&p.o))).collect();
        parts.join(" ")
    }

    /// Constant terms in pattern order.
    pub fn constants(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        for p in &self.patterns {
            for t in [&p.s, &p.o] {
                if let PatternTerm::Const(c) = t {
                    if !out.contains(&c) {
                        out.push(c);
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for GroundedQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.answer_var)?;
        for p in &self.patterns {
            write!(f, " {p}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Endpoint {
    Const(Term),
    Var { name: String, class: Option<String>, mediator: bool },
}

impl Endpoint {
    fn term(&self) -> PatternTerm {
        match self {
            Endpoint::Const(t) => PatternTerm::Const(t.clone()),
            Endpoint::Var { name, .. } => PatternTerm::var(name),
        }
    }

    fn admits(&self, t: &Term, store: &TripleStore) -> bool {
        match self {
            Endpoint::Const(c) => c == t,
            Endpoint::Var { class, mediator, .. } => {
                let class_ok = match class {
                    Some(c) => t.as_id().is_some_and(|id| store.has_type(id, c)),
                    None => true,
                };
                class_ok && (!mediator || t.as_id().is_some_and(|id| store.is_mediator(id)))
            }
        }
    }
}

/// At least one stored triple `(s, p, o)` with both endpoints admissible.
fn supported(store: &TripleStore, s: &Endpoint, p: &str, o: &Endpoint) -> bool {
    match (s, o) {
        (Endpoint::Const(Term::Literal { .. }), _) => false,
        (Endpoint::Const(Term::Id(sid)), _) => store.by_subject_predicate(sid, p).any(|t| o.admits(&t.o, store)),
        (_, Endpoint::Const(ot)) => store.by_predicate_object(p, ot).any(|t| s.admits(&Term::id(&t.s), store)),
        _ => store.by_predicate(p).any(|t| s.admits(&Term::id(&t.s), store) && o.admits(&t.o, store)),
    }
}

fn var_name(u: &UngroundedQuery, i: usize) -> String {
    if i == u.answer {
        "?x".into()
    } else if u.nodes[i].kind == NodeKind::Mediator {
        format!("?m{i}")
    } else {
        format!("?v{i}")
    }
}

/// Advances a mixed-radix counter, last digit fastest. False on wrap-around.
fn advance(counter: &mut [usize], radix: &[usize]) -> bool {
    for i in (0..counter.len()).rev() {
        counter[i] += 1;
        if counter[i] < radix[i] {
            return true;
        }
        counter[i] = 0;
    }
    false
}

/// Grounds `u` by linking every node and, for each combination of node
/// candidates, enumerating every predicate and direction that has single-edge
/// support in the store. Node candidates are taken in popularity order,
/// predicates in id order with the forward direction first.
pub fn ground(
    u: &UngroundedQuery,
    variant: usize,
    store: &TripleStore,
    dict: &AliasDictionary,
    limits: &GroundLimits,
) -> Vec<GroundedQuery> {
    let mut out = Vec::new();
    if u.edges.is_empty() || !u.is_connected() || limits.max_grounded == 0 {
        return out;
    }
    let options: Vec<Vec<NodeOption>> =
        u.nodes.iter().map(|n| link(n.kind, &n.surface, dict, limits.max_link_candidates)).collect();
    if options.iter().any(Vec::is_empty) {
        return out;
    }
    let predicates: Vec<&String> = store.predicates().iter().filter(|p| *p != TYPE_PREDICATE).collect();
    let radix: Vec<usize> = options.iter().map(Vec::len).collect();
    let mut pick = vec![0; u.nodes.len()];
    loop {
        let ends: Vec<Endpoint> = pick
            .iter()
            .enumerate()
            .map(|(i, &k)| match &options[i][k] {
                NodeOption::Const(t) => Endpoint::Const(t.clone()),
                NodeOption::Var { class } => Endpoint::Var { name: var_name(u, i), class: class.clone(), mediator: false },
                NodeOption::Mediator => Endpoint::Var { name: var_name(u, i), class: None, mediator: true },
            })
            .collect();
        let per_edge: Vec<Vec<TriplePattern>> = u
            .edges
            .iter()
            .map(|e| {
                let (a, b) = (&ends[e.a], &ends[e.b]);
                let mut v = Vec::new();
                for p in &predicates {
                    if supported(store, a, p, b) {
                        v.push(TriplePattern::new(a.term(), p.as_str(), b.term()));
                    }
                    if supported(store, b, p, a) {
                        v.push(TriplePattern::new(b.term(), p.as_str(), a.term()));
                    }
                }
                v
            })
            .collect();
        if per_edge.iter().all(|v| !v.is_empty()) {
            let mut types: Vec<TriplePattern> = ends
                .iter()
                .filter_map(|e| match e {
                    Endpoint::Var { name, class: Some(c), .. } => {
                        Some(TriplePattern::new(PatternTerm::var(name), TYPE_PREDICATE, PatternTerm::id(c)))
                    }
                    _ => None,
                })
                .collect();
            types.sort();
            let mediator_vars: Vec<String> = ends
                .iter()
                .filter_map(|e| match e {
                    Endpoint::Var { name, mediator: true, .. } => Some(name.clone()),
                    _ => None,
                })
                .collect();
            let edge_radix: Vec<usize> = per_edge.iter().map(Vec::len).collect();
            let mut choice = vec![0; per_edge.len()];
            loop {
                let mut patterns: Vec<TriplePattern> =
                    choice.iter().enumerate().map(|(e, &k)| per_edge[e][k].clone()).collect();
                patterns.extend(types.iter().cloned());
                out.push(GroundedQuery {
                    patterns,
                    answer_var: var_name(u, u.answer),
                    mediator_vars: mediator_vars.clone(),
                    provenance: Provenance::Variant(variant),
                });
                if out.len() >= limits.max_grounded {
                    return out;
                }
                if !advance(&mut choice, &edge_radix) {
                    break;
                }
            }
        }
        if !advance(&mut pick, &radix) {
            return out;
        }
    }
}
