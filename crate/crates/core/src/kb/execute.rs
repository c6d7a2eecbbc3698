use std::collections::{BTreeSet, HashMap};

use super::ground::{GroundedQuery, PatternTerm, TriplePattern};
use super::{Term, Triple, TripleStore};

type Binding = HashMap<String, Term>;

fn resolve<'a>(t: &'a PatternTerm, b: &'a Binding) -> Option<&'a Term> {
    match t {
        PatternTerm::Const(c) => Some(c),
        PatternTerm::Var(v) => b.get(v),
    }
}

fn bound_count(p: &TriplePattern, b: &Binding) -> usize {
    resolve(&p.s, b).is_some() as usize + resolve(&p.o, b).is_some() as usize
}

/// Binds `term` to `value` if compatible, recording new variables in `fresh`.
fn unify(term: &PatternTerm, value: &Term, b: &mut Binding, fresh: &mut Vec<String>, g: &GroundedQuery, store: &TripleStore) -> bool {
    match term {
        PatternTerm::Const(c) => c == value,
        PatternTerm::Var(v) => match b.get(v) {
            Some(old) => old == value,
            None => {
                if g.mediator_vars.contains(v) && !value.as_id().is_some_and(|id| store.is_mediator(id)) {
                    return false;
                }
                b.insert(v.clone(), value.clone());
                fresh.push(v.clone());
                true
            }
        },
    }
}

fn solve(g: &GroundedQuery, store: &TripleStore, left: &mut Vec<usize>, b: &mut Binding, out: &mut BTreeSet<Term>) {
    if left.is_empty() {
        if let Some(a) = b.get(&g.answer_var) {
            out.insert(a.clone());
        }
        return;
    }
    // most bound positions first, lowest index on ties
    let (slot, _) = left
        .iter()
        .enumerate()
        .max_by_key(|&(k, &i)| (bound_count(&g.patterns[i], b), std::cmp::Reverse(k)))
        .expect("non-empty");
    let idx = left.swap_remove(slot);
    let p = &g.patterns[idx];
    let s = resolve(&p.s, b).cloned();
    let o = resolve(&p.o, b).cloned();
    let candidates: Vec<Triple> = match &s {
        Some(Term::Literal { .. }) => Vec::new(),
        Some(Term::Id(sid)) => store.matching(Some(sid), Some(&p.p), o.as_ref()).into_iter().cloned().collect(),
        None => store.matching(None, Some(&p.p), o.as_ref()).into_iter().cloned().collect(),
    };
    for t in candidates {
        let mut fresh = Vec::new();
        if unify(&p.s, &Term::id(&t.s), b, &mut fresh, g, store) && unify(&p.o, &t.o, b, &mut fresh, g, store) {
            solve(g, store, left, b, out);
        }
        for v in fresh {
            b.remove(&v);
        }
    }
    left.push(idx);
    let last = left.len() - 1;
    left.swap(slot, last);
}

/// Distinct bindings of the answer variable over all solutions of the
/// conjunctive pattern.
pub fn execute(g: &GroundedQuery, store: &TripleStore) -> BTreeSet<Term> {
    let mut out = BTreeSet::new();
    if !g.is_valid() {
        log::warn!("answer variable {} is not constrained by any pattern", g.answer_var);
        return out;
    }
    let mut left: Vec<usize> = (0..g.patterns.len()).collect();
    solve(g, store, &mut left, &mut HashMap::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::Provenance;

    fn gq(patterns: Vec<TriplePattern>) -> GroundedQuery {
        GroundedQuery { patterns, answer_var: "?x".into(), mediator_vars: vec![], provenance: Provenance::Variant(0) }
    }

    #[test]
    fn join_through_variable() {
        let st = TripleStore::parse("a\tp\tb\nb\tq\tc\nb\tq\td\ne\tp\tf\n").unwrap();
        let g = gq(vec![
            TriplePattern::new(PatternTerm::id("a"), "p", PatternTerm::var("?y")),
            TriplePattern::new(PatternTerm::var("?y"), "q", PatternTerm::var("?x")),
        ]);
        assert_eq!(execute(&g, &st), BTreeSet::from([Term::id("c"), Term::id("d")]));
    }

    #[test]
    fn unsatisfiable_ground_triple() {
        let st = TripleStore::parse("a\tp\tb\n").unwrap();
        let g = gq(vec![
            TriplePattern::new(PatternTerm::id("a"), "p", PatternTerm::var("?x")),
            TriplePattern::new(PatternTerm::id("a"), "p", PatternTerm::id("zz")),
        ]);
        assert!(execute(&g, &st).is_empty());
    }

    #[test]
    fn unconstrained_answer() {
        let st = TripleStore::parse("a\tp\tb\n").unwrap();
        let mut g = gq(vec![TriplePattern::new(PatternTerm::id("a"), "p", PatternTerm::var("?y"))]);
        assert!(execute(&g, &st).is_empty());
        g.answer_var = "?y".into();
        assert_eq!(execute(&g, &st).len(), 1);
    }

    #[test]
    fn mediator_filter() {
        let st = TripleStore::parse("#mediator-class cvt\na\tp\tm1\na\tp\tn1\nm1\ttype.object.type\tcvt\nm1\tq\tx1\nn1\tq\tx2\n").unwrap();
        let mut g = gq(vec![
            TriplePattern::new(PatternTerm::id("a"), "p", PatternTerm::var("?m")),
            TriplePattern::new(PatternTerm::var("?m"), "q", PatternTerm::var("?x")),
        ]);
        assert_eq!(execute(&g, &st).len(), 2);
        g.mediator_vars.push("?m".into());
        assert_eq!(execute(&g, &st), BTreeSet::from([Term::id("x1")]));
    }
}
