//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Every check compares against an oracle written here, not against
//! the library's own helpers.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skelqa::backend::OracleBackend;
use skelqa::harness::{eval_skeletons, evaluate, load_dataset, Answer, Pipeline, PipelineConfig};
use skelqa::kb::{execute, GroundedQuery, PatternTerm, Provenance, Term, Triple, TriplePattern, TripleStore, TYPE_PREDICATE};
use skelqa::query::{enumerate_variants, NodeKind, QueryEdge, QueryNode, UngroundedQuery, MAX_VARIANTS};
use skelqa::scoring::{
    sentence_score, train_word_scorer, EmbeddingTable, PatternBank, QuestionPattern, WordBag, WordExample, WordHyper,
    WordParams, WordScorerModel,
};
use skelqa::text::gold::load_gold;
use skelqa::text::{AttachmentLabel, Skeleton};

/// Ok carries an optional note printed after PASS.
type Check = Result<String, String>;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

// ---------------------------------------------------------------- 1

const RUNNING: &str = "what movie that Miley Cyrus acted in had a director named Tom Vaughan?";

fn has_pattern(g: &GroundedQuery, s: &PatternTerm, p: &str, o: &PatternTerm) -> bool {
    g.patterns.iter().any(|t| &t.s == s && t.p == p && &t.o == o)
}

fn running_example() -> Check {
    let cfg = PipelineConfig::load(&data("running.toml")).map_err(|e| e.to_string())?;
    let pipeline = Pipeline::load(&cfg).map_err(|e| e.to_string())?;
    ensure!(pipeline.store.len() <= 12, "toy store has {} triples", pipeline.store.len());
    let ans = pipeline.answer_question("re", RUNNING);
    ensure!(ans.error.is_none(), "pipeline error {:?}", ans.error);

    // what(0) movie(1) that(2) Miley(3) Cyrus(4) acted(5) in(6) had(7) a(8)
    // director(9) named(10) Tom(11) Vaughan(12) ?(13)
    let expected = Skeleton::from_parts(
        "re",
        14,
        &[0, 1, 7, 8, 9, 13],
        &[(vec![10, 11, 12], 9, AttachmentLabel::Acl), (vec![2, 3, 4, 5, 6], 1, AttachmentLabel::AclRelcl)],
    )
    .map_err(|e| e.to_string())?;
    let skel = ans.trace.skeleton.as_ref().ok_or("no skeleton in trace")?;
    ensure!(*skel == expected, "skeleton differs: {skel:?}");
    let q = skelqa::text::Question::new("re", RUNNING).unwrap();
    let heads: BTreeSet<&str> = skel.attachments().map(|(_, a)| q.surface(a.head_token)).collect();
    ensure!(heads == BTreeSet::from(["director", "movie"]), "headwords {heads:?}");

    let top = ans.top().ok_or("no answer")?;
    let g = &top.query;
    let x = PatternTerm::var(g.answer_var.clone());
    let mediator = g
        .patterns
        .iter()
        .find(|t| t.s == PatternTerm::id("m.0bdxs5") && t.p == "film.actor.film")
        .and_then(|t| t.o.as_var().map(str::to_string))
        .ok_or("no actor-to-performance pattern")?;
    ensure!(g.mediator_vars.contains(&mediator), "{mediator} is not a mediator variable");
    let m = PatternTerm::var(mediator);
    ensure!(has_pattern(g, &m, "film.performance.film", &x), "no performance-to-film pattern in {g}");
    ensure!(has_pattern(g, &x, "film.film.directed_by", &PatternTerm::id("m.02z02cx")), "no director pattern in {g}");
    ensure!(top.answers == ["m.so_undercover"], "answers {:?}", top.answers);
    Ok(String::new())
}

// ---------------------------------------------------------------- 2

fn oracle_fidelity() -> Check {
    let gold = load_gold(&data("skeletons.jsonl")).map_err(|e| e.to_string())?;
    ensure!(gold.len() >= 25, "only {} gold skeletons", gold.len());
    let mut labels = BTreeSet::new();
    let (mut star, mut path, mut depth) = (false, false, 0);
    for g in &gold {
        let s = &g.skeleton;
        let mut kids = vec![0usize; s.nodes.len()];
        for (_, a) in s.attachments() {
            labels.insert(a.label.as_str());
            kids[a.parent] += 1;
        }
        star |= kids.iter().any(|&k| k >= 2);
        path |= s.nodes.len() >= 3 && kids.iter().all(|&k| k <= 1);
        depth = depth.max((0..s.nodes.len()).map(|i| s.depth(i)).max().unwrap_or(0));
    }
    ensure!(labels.len() == 7, "labels covered: {labels:?}");
    ensure!(star && path && depth >= 3, "shapes: star {star}, path {path}, depth {depth}");

    let backend = OracleBackend::from_gold(&gold).map_err(|e| e.to_string())?;
    let report = eval_skeletons(&gold, &backend).map_err(|e| e.to_string())?;
    ensure!(report.parse_failures == 0, "{} parse failures", report.parse_failures);
    ensure!(report.las.gold > 0 && report.las.matched == report.las.gold && report.las.predicted == report.las.gold, "LAS {:?}", report.las);
    let p = report.procedures;
    for (name, a) in [("split", p.split), ("span", p.span), ("headword", p.headword), ("relation", p.relation)] {
        ensure!(a.total > 0 && a.correct == a.total, "{name}: {}/{}", a.correct, a.total);
    }
    Ok(String::new())
}

// ---------------------------------------------------------------- 3

fn oracle_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// The matching model written out directly: cosine matrix, row and column
/// max pooling into sorted-word slots, two affine maps, one output layer.
fn oracle_score(params: &WordParams<f64>, emb: &BTreeMap<String, Vec<f64>>, dim: usize, q: &[String], p: &[String], n_max: usize, m_max: usize) -> f64 {
    let mut q = q.to_vec();
    let mut p = p.to_vec();
    q.sort();
    p.sort();
    let vec_of = |w: &String| emb.get(w).cloned().unwrap_or_else(|| vec![0.0; dim]);
    let mut yq = vec![0.0; n_max];
    let mut yp = vec![0.0; m_max];
    for i in 0..q.len() {
        yq[i] = p.iter().map(|w| oracle_cosine(&vec_of(&q[i]), &vec_of(w))).fold(f64::NEG_INFINITY, f64::max);
    }
    for j in 0..p.len() {
        yp[j] = q.iter().map(|w| oracle_cosine(&vec_of(w), &vec_of(&p[j]))).fold(f64::NEG_INFINITY, f64::max);
    }
    let h = params.b_q.len();
    let mut s = params.b_out;
    for k in 0..h {
        let mut hq = params.b_q[k];
        for i in 0..n_max {
            hq += params.w_q[k][i] * yq[i];
        }
        let mut hp = params.b_p[k];
        for j in 0..m_max {
            hp += params.w_p[k][j] * yp[j];
        }
        s += params.w_out[k] * hq + params.w_out[h + k] * hp;
    }
    s
}

fn random_params(rng: &mut ChaCha8Rng, h: usize, n: usize, m: usize) -> WordParams<f64> {
    let mut p = WordParams::<f64>::zeros(h, n, m);
    let flat: Vec<f64> = p.flat().iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
    p.set_flat(&flat);
    p
}

fn forward_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dim = 6;
    let vocab: Vec<String> = (0..48).map(|i| format!("w{i:02}")).collect();
    // the last eight words stay out of the table
    let emb: BTreeMap<String, Vec<f64>> =
        vocab[..40].iter().map(|w| (w.clone(), (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())).collect();
    let table = EmbeddingTable::from_pairs(dim, emb.iter().map(|(w, v)| (w.clone(), v.clone())));
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let h = rng.gen_range(1..=8);
        let hyper = WordHyper { hidden: h, ..WordHyper::default() };
        let mut model = WordScorerModel::init(hyper, table.clone());
        model.params = random_params(&mut rng, h, hyper.n_max, hyper.m_max);
        let nq = rng.gen_range(1..=16);
        let np = rng.gen_range(1..=16);
        let q: Vec<String> = vocab.choose_multiple(&mut rng, nq).cloned().collect();
        let p: Vec<String> = vocab.choose_multiple(&mut rng, np).cloned().collect();
        let got = model.score(&WordBag::new(q.clone()).unwrap(), &WordBag::new(p.clone()).unwrap()).map_err(|e| e.to_string())?;
        let want = oracle_score(&model.params, &emb, dim, &q, &p, hyper.n_max, hyper.m_max);
        worst = worst.max((got - want).abs());
    }
    ensure!(worst <= 1e-9, "max deviation {worst:e}");
    Ok(String::new())
}

// ---------------------------------------------------------------- 4

fn gradient_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (n, m) = (16, 16);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let h = rng.gen_range(1..=6);
        let params = random_params(&mut rng, h, n, m);
        let mut pooled = |len: usize| -> Vec<f64> {
            let used = rng.gen_range(1..=len);
            (0..len).map(|i| if i < used { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect()
        };
        let (yq, pos, neg) = (pooled(n), pooled(m), pooled(m));
        // keep the hinge active and far from its kink
        let margin = (params.score_pooled(&yq, &pos) - params.score_pooled(&yq, &neg)).abs() + 1.0;
        let (_, grad) = params.pair_loss(&yq, &pos, &neg, margin);
        let theta = params.flat();
        let analytic = grad.flat();
        let loss_at = |v: &[f64]| {
            let mut p = params.clone();
            p.set_flat(v);
            margin - p.score_pooled(&yq, &pos) + p.score_pooled(&yq, &neg)
        };
        let step = 1e-3;
        for i in 0..theta.len() {
            let mut up = theta.clone();
            up[i] += step;
            let mut down = theta.clone();
            down[i] -= step;
            let numeric = (loss_at(&up) - loss_at(&down)) / (2.0 * step);
            let scale = analytic[i].abs().max(numeric.abs());
            let rel = if scale < 1e-9 { (analytic[i] - numeric).abs() } else { (analytic[i] - numeric).abs() / scale };
            worst = worst.max(rel);
        }
    }
    ensure!(worst <= 1e-4, "max relative error {worst:e}");
    Ok(String::new())
}

// ---------------------------------------------------------------- 5

/// Eight topics; question and predicate words of a topic point the same way.
fn synthetic() -> (EmbeddingTable<f64>, Vec<WordExample>) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (topics, dim, per) = (8usize, 8usize, 6usize);
    let mut table = EmbeddingTable::new(dim);
    for t in 0..topics {
        for k in 0..per {
            for side in ["q", "p"] {
                let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.2..0.2)).collect();
                v[t] += 1.0;
                table.insert(format!("{side}{t}_{k}"), v);
            }
        }
    }
    let bag = |side: &str, t: usize, rng: &mut ChaCha8Rng| {
        let mut ks: Vec<usize> = (0..per).collect();
        ks.shuffle(rng);
        let size = rng.gen_range(2..=4);
        WordBag::new(ks[..size].iter().map(|k| format!("{side}{t}_{k}"))).unwrap()
    };
    let mut examples = Vec::new();
    for i in 0..240 {
        let t = i % topics;
        let question = bag("q", t, &mut rng);
        let positive = bag("p", t, &mut rng);
        let negatives = (0..6)
            .map(|_| {
                let other = (t + rng.gen_range(1..topics)) % topics;
                bag("p", other, &mut rng)
            })
            .collect();
        examples.push(WordExample { question, positive, negatives });
    }
    (table, examples)
}

fn trainability() -> Check {
    let (table, examples) = synthetic();
    let hyper = WordHyper { epochs: 30, ..WordHyper::default() };
    let (model, report) = train_word_scorer(&examples, table, hyper).map_err(|e| e.to_string())?;
    let first = report.epoch_losses[0];
    let last = *report.epoch_losses.last().unwrap();
    let score = |q: &WordBag, p: &WordBag| model.score(q, p).unwrap();
    let min_pos = examples.iter().map(|e| score(&e.question, &e.positive)).fold(f64::INFINITY, f64::min);
    let max_neg = examples
        .iter()
        .flat_map(|e| e.negatives.iter().map(|n| score(&e.question, n)))
        .fold(f64::NEG_INFINITY, f64::max);
    let summary = format!("epoch-1 loss {first:.4}, final {last:.4}, min pos {min_pos:.4}, max neg {max_neg:.4}");
    ensure!(last < 0.1 * first, "{summary}");
    ensure!(min_pos > max_neg, "{summary}");
    Ok(summary)
}

// ---------------------------------------------------------------- 6

const MEDIATOR_CLASS: &str = "c.mediator";

fn random_store(rng: &mut ChaCha8Rng) -> (TripleStore, BTreeSet<(Term, String, Term)>, Vec<Term>) {
    let ents: Vec<String> = (0..rng.gen_range(3..=8)).map(|i| format!("e{i}")).collect();
    let lits = [Term::literal("7", skelqa::query::LiteralType::Number), Term::literal("1999", skelqa::query::LiteralType::Date)];
    let preds = ["p0", "p1", "p2"];
    let mut triples = Vec::new();
    for _ in 0..rng.gen_range(1..=200) {
        let s = ents.choose(rng).unwrap().clone();
        let r: f64 = rng.gen();
        let (p, o) = if r < 0.1 {
            (TYPE_PREDICATE.to_string(), Term::id(MEDIATOR_CLASS))
        } else if r < 0.25 {
            (preds.choose(rng).unwrap().to_string(), lits.choose(rng).unwrap().clone())
        } else {
            (preds.choose(rng).unwrap().to_string(), Term::id(ents.choose(rng).unwrap()))
        };
        triples.push(Triple::new(s, p, o));
    }
    let set = triples.iter().map(|t| (Term::id(&t.s), t.p.clone(), t.o.clone())).collect();
    let mut universe: BTreeSet<Term> = ents.iter().map(Term::id).collect();
    universe.extend(lits.iter().cloned());
    universe.insert(Term::id(MEDIATOR_CLASS));
    let store = TripleStore::from_triples(triples, [MEDIATOR_CLASS.to_string()]);
    (store, set, universe.into_iter().collect())
}

fn random_query(rng: &mut ChaCha8Rng, universe: &[Term]) -> GroundedQuery {
    let nvars = rng.gen_range(1..=4);
    let vars: Vec<String> = (0..nvars).map(|i| format!("?v{i}")).collect();
    let preds = ["p0", "p1", "p2", TYPE_PREDICATE];
    let term = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.7) {
            PatternTerm::var(vars.choose(rng).unwrap().clone())
        } else {
            PatternTerm::Const(universe.choose(rng).unwrap().clone())
        }
    };
    let mut patterns: Vec<TriplePattern> = (0..rng.gen_range(1..=4))
        .map(|_| TriplePattern::new(term(rng), *preds.choose(rng).unwrap(), term(rng)))
        .collect();
    let used: Vec<String> = {
        let mut u = Vec::new();
        for p in &patterns {
            for v in [p.s.as_var(), p.o.as_var()].into_iter().flatten() {
                if !u.contains(&v.to_string()) {
                    u.push(v.to_string());
                }
            }
        }
        u
    };
    let answer_var = match used.choose(rng) {
        Some(v) => v.clone(),
        None => {
            patterns[0].s = PatternTerm::var("?v0");
            "?v0".to_string()
        }
    };
    let mediator_vars = used.iter().filter(|v| **v != answer_var && rng.gen_bool(0.3)).cloned().collect();
    GroundedQuery { patterns, answer_var, mediator_vars, provenance: Provenance::Variant(0) }
}

/// Tries every assignment of every variable.
fn brute_execute(g: &GroundedQuery, triples: &BTreeSet<(Term, String, Term)>, universe: &[Term]) -> BTreeSet<Term> {
    let mut vars: Vec<String> = Vec::new();
    for p in &g.patterns {
        for t in [&p.s, &p.o] {
            if let PatternTerm::Var(v) = t {
                if !vars.contains(v) {
                    vars.push(v.clone());
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    let total = universe.len().pow(vars.len() as u32);
    for code in 0..total {
        let mut c = code;
        let mut bind: BTreeMap<&str, &Term> = BTreeMap::new();
        for v in &vars {
            bind.insert(v, &universe[c % universe.len()]);
            c /= universe.len();
        }
        let val = |t: &PatternTerm| match t {
            PatternTerm::Var(v) => bind[v.as_str()].clone(),
            PatternTerm::Const(c) => c.clone(),
        };
        let ok = g.patterns.iter().all(|p| triples.contains(&(val(&p.s), p.p.clone(), val(&p.o))))
            && g.mediator_vars.iter().filter(|v| bind.contains_key(v.as_str())).all(|v| {
                triples.contains(&(bind[v.as_str()].clone(), TYPE_PREDICATE.to_string(), Term::id(MEDIATOR_CLASS)))
            });
        if ok {
            out.insert(bind[g.answer_var.as_str()].clone());
        }
    }
    out
}

fn execution_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut nonempty = 0;
    for round in 0..200 {
        let (store, triples, universe) = random_store(&mut rng);
        for _ in 0..5 {
            let g = random_query(&mut rng, &universe);
            let want = brute_execute(&g, &triples, &universe);
            let got = execute(&g, &store);
            ensure!(got == want, "store {round}, query {g}: got {got:?}, want {want:?}");
            nonempty += !want.is_empty() as usize;
        }
    }
    ensure!(nonempty >= 100, "only {nonempty} queries with answers; generator too sparse");
    Ok(String::new())
}

// ---------------------------------------------------------------- 7

#[derive(Clone, Debug)]
struct Graph {
    /// (kind, lowercased surface, is answer)
    nodes: Vec<(String, String, bool)>,
    edges: Vec<(usize, usize, String)>,
}

impl Graph {
    fn from_query(u: &UngroundedQuery) -> Self {
        Graph {
            nodes: u.nodes.iter().enumerate().map(|(i, n)| (n.kind.to_string(), n.surface.to_lowercase(), i == u.answer)).collect(),
            edges: u.edges.iter().map(|e| (e.a, e.b, e.label.clone())).collect(),
        }
    }

    fn class_like(&self, i: usize) -> bool {
        self.nodes[i].0 == "class" || self.nodes[i].0 == "wh"
    }

    fn is_mediator(&self, i: usize) -> bool {
        self.nodes[i].0 == "mediator"
    }

    fn contract(&self, e: usize) -> Option<Graph> {
        let (a, b, ref label) = self.edges[e];
        if !(self.class_like(a) && self.class_like(b)) {
            return None;
        }
        let (keep, gone) = if self.nodes[a].2 || (!self.nodes[b].2 && a < b) { (a, b) } else { (b, a) };
        let absorbed = self.nodes[gone].1.clone();
        let idx = |i: usize| if i == gone { keep } else { i };
        let shift = |i: usize| if i > gone { i - 1 } else { i };
        let mut edges = Vec::new();
        for (k, (x, y, l)) in self.edges.iter().enumerate() {
            if k == e {
                continue;
            }
            let l = if *x == gone || *y == gone {
                [label.as_str(), absorbed.as_str(), l.as_str()].iter().filter(|s| !s.is_empty()).copied().collect::<Vec<_>>().join(" ")
            } else {
                l.clone()
            };
            let (x, y) = (idx(*x), idx(*y));
            if x != y {
                edges.push((shift(x), shift(y), l));
            }
        }
        let nodes = self.nodes.iter().enumerate().filter(|(i, _)| *i != gone).map(|(_, n)| n.clone()).collect();
        Some(Graph { nodes, edges })
    }

    fn subdivide(&self, e: usize) -> Option<Graph> {
        let (a, b, ref l) = self.edges[e];
        if self.is_mediator(a) || self.is_mediator(b) {
            return None;
        }
        let mut g = self.clone();
        let m = g.nodes.len();
        g.nodes.push(("mediator".into(), String::new(), false));
        g.edges[e] = (a, m, l.clone());
        g.edges.push((m, b, l.clone()));
        Some(g)
    }
}

/// Labeled isomorphism by backtracking over label- and degree-compatible
/// node maps.
fn isomorphic(g: &Graph, h: &Graph) -> bool {
    if g.nodes.len() != h.nodes.len() || g.edges.len() != h.edges.len() {
        return false;
    }
    let degree = |x: &Graph, i: usize| x.edges.iter().filter(|(a, b, _)| *a == i || *b == i).count();
    let key = |a: usize, b: usize, l: &str| {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        (a, b, l.to_string())
    };
    let mut target: Vec<(usize, usize, String)> = h.edges.iter().map(|(a, b, l)| key(*a, *b, l)).collect();
    target.sort();
    fn go(
        g: &Graph,
        h: &Graph,
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
        target: &[(usize, usize, String)],
        degree: &dyn Fn(&Graph, usize) -> usize,
    ) -> bool {
        let i = map.len();
        if i == g.nodes.len() {
            let mut mapped: Vec<(usize, usize, String)> = g
                .edges
                .iter()
                .map(|(a, b, l)| {
                    let (x, y) = (map[*a], map[*b]);
                    if x <= y {
                        (x, y, l.clone())
                    } else {
                        (y, x, l.clone())
                    }
                })
                .collect();
            mapped.sort();
            return mapped == target;
        }
        for j in 0..h.nodes.len() {
            if used[j] || g.nodes[i] != h.nodes[j] || degree(g, i) != degree(h, j) {
                continue;
            }
            map.push(j);
            used[j] = true;
            if go(g, h, map, used, target, degree) {
                return true;
            }
            map.pop();
            used[j] = false;
        }
        false
    }
    go(g, h, &mut Vec::new(), &mut vec![false; h.nodes.len()], &target, &degree)
}

/// Every operation sequence: an optional contraction first, then
/// subdivisions of distinct edges in every order.
fn brute_variants(u: &UngroundedQuery) -> Vec<Graph> {
    let start = Graph::from_query(u);
    let mut results = vec![start.clone()];
    let mut frontier = vec![start.clone()];
    for e in 0..start.edges.len() {
        if let Some(c) = start.contract(e) {
            results.push(c.clone());
            frontier.push(c);
        }
    }
    while let Some(g) = frontier.pop() {
        for e in 0..g.edges.len() {
            if let Some(s) = g.subdivide(e) {
                results.push(s.clone());
                frontier.push(s);
            }
        }
    }
    let mut classes: Vec<Graph> = Vec::new();
    for r in results {
        if !classes.iter().any(|c| isomorphic(c, &r)) {
            classes.push(r);
        }
    }
    classes
}

fn random_ungrounded(rng: &mut ChaCha8Rng) -> UngroundedQuery {
    let n = rng.gen_range(2..=5);
    let kinds = [NodeKind::Class, NodeKind::Class, NodeKind::Entity, NodeKind::Wh];
    let surfaces = ["film", "person", "x"];
    let labels = ["", "acted", "directed"];
    let answer = rng.gen_range(0..n);
    let nodes = (0..n)
        .map(|i| {
            let kind = if i == answer { NodeKind::Wh } else { *kinds.choose(rng).unwrap() };
            QueryNode { kind, surface: surfaces.choose(rng).unwrap().to_string(), tokens: Vec::new() }
        })
        .collect();
    let mut edges: Vec<QueryEdge> = (1..n)
        .map(|i| QueryEdge { a: rng.gen_range(0..i), b: i, label: labels.choose(rng).unwrap().to_string() })
        .collect();
    if edges.len() < 4 && n >= 3 && rng.gen_bool(0.4) {
        let (a, b) = (0, n - 1);
        if !edges.iter().any(|e| (e.a, e.b) == (a, b)) {
            edges.push(QueryEdge { a, b, label: labels.choose(rng).unwrap().to_string() });
        }
    }
    UngroundedQuery { nodes, edges, answer }
}

fn operation_count(original: &UngroundedQuery, v: &UngroundedQuery) -> usize {
    let mediators = v.nodes.iter().filter(|n| n.kind == NodeKind::Mediator).count();
    let contractions = original.nodes.len() - (v.nodes.len() - mediators);
    mediators + contractions
}

fn variant_enumeration() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for round in 0..20 {
        let u = random_ungrounded(&mut rng);
        let got = enumerate_variants(&u);
        ensure!(got[0] == u, "round {round}: first variant is not the query itself");
        let got: Vec<Graph> = got.iter().map(Graph::from_query).collect();
        for i in 0..got.len() {
            for j in 0..i {
                ensure!(!isomorphic(&got[i], &got[j]), "round {round}: variants {j} and {i} are isomorphic");
            }
        }
        let want = brute_variants(&u);
        ensure!(got.len() == want.len().min(MAX_VARIANTS), "round {round}: {} variants, brute force finds {}", got.len(), want.len());
        for (i, g) in got.iter().enumerate() {
            ensure!(want.iter().any(|w| isomorphic(w, g)), "round {round}: variant {i} not reachable by any operation sequence");
        }
    }
    // seven independent edges give 2^7 subdivision subsets, well over the cap
    let node = |kind, s: &str| QueryNode { kind, surface: s.into(), tokens: Vec::new() };
    let mut nodes = vec![node(NodeKind::Wh, "what")];
    let mut edges = Vec::new();
    for i in 1..=7 {
        nodes.push(node(NodeKind::Entity, &format!("e{i}")));
        edges.push(QueryEdge { a: 0, b: i, label: String::new() });
    }
    let big = UngroundedQuery { nodes, edges, answer: 0 };
    let vs = enumerate_variants(&big);
    ensure!(vs.len() == MAX_VARIANTS, "cap: got {} variants", vs.len());
    let ops: Vec<usize> = vs.iter().map(|v| operation_count(&big, v)).collect();
    ensure!(ops.windows(2).all(|w| w[0] <= w[1]), "cap does not keep fewest operations first: {ops:?}");
    // all 1 + 7 + 21 variants with at most two operations must survive
    ensure!(ops.iter().filter(|&&k| k <= 2).count() == 29, "cheap variants dropped: {ops:?}");
    Ok(String::new())
}

// ---------------------------------------------------------------- 8

fn q(s: &str) -> PatternTerm {
    if s.starts_with('?') {
        PatternTerm::var(s)
    } else {
        PatternTerm::id(s)
    }
}

fn query(answer: &str, mediators: &[&str], triples: &[(&str, &str, &str)]) -> GroundedQuery {
    GroundedQuery {
        patterns: triples.iter().map(|(s, p, o)| TriplePattern::new(q(s), *p, q(o))).collect(),
        answer_var: answer.into(),
        mediator_vars: mediators.iter().map(|m| m.to_string()).collect(),
        provenance: Provenance::Variant(0),
    }
}

fn sentence_behaviour() -> Check {
    let store = TripleStore::load(&data("kb.tsv")).map_err(|e| e.to_string())?;
    let emb = EmbeddingTable::<f64>::load(&data("embeddings.txt")).map_err(|e| e.to_string())?;
    let mut bank = PatternBank::default();
    let entries: [(&str, GroundedQuery, Vec<&str>); 5] = [
        ("who is the wife of ⟨E1⟩?", query("?x", &[], &[("m.obama", "people.person.spouse", "?x")]), vec!["m.obama"]),
        ("where was ⟨E1⟩ born?", query("?x", &[], &[("m.0bdxs5", "people.person.place_of_birth", "?x")]), vec!["m.0bdxs5"]),
        ("when was ⟨E1⟩ released?", query("?x", &[], &[("m.cast_away", "film.film.release_year", "?x")]), vec!["m.cast_away"]),
        ("which book was written by ⟨E1⟩?", query("?x", &[], &[("m.jane_austen", "book.author.works_written", "?x")]), vec!["m.jane_austen"]),
        (
            "what movie that ⟨E1⟩ acted in had a director named ⟨E2⟩?",
            query(
                "?x",
                &["?m"],
                &[("m.demi_moore", "film.actor.film", "?m"), ("?m", "film.performance.film", "?x"), ("?x", "film.film.directed_by", "m.lisa_azuelos")],
            ),
            vec!["m.demi_moore", "m.lisa_azuelos"],
        ),
    ];
    for (text, g, ents) in entries {
        ensure!(bank.add(QuestionPattern::from_text(text), &g, ents.iter().map(|e| e.to_string()).collect()), "bank rejected `{text}`");
    }
    let hanks = Term::id("m.tom_hanks");
    let spouse = query("?y", &[], &[("m.tom_hanks", "people.person.spouse", "?y")]);
    let born = query("?x", &[], &[("m.tom_hanks", "people.person.place_of_birth", "?x")]);

    // exact-pattern hit, the candidate already present under another variable name
    let mut cands = vec![born.clone(), spouse.clone()];
    let s = sentence_score(&QuestionPattern::from_text("who is the wife of ⟨E1⟩?"), &[hanks.clone()], &bank, &emb, &store, &mut cands);
    ensure!(s == [0.0, 1.0] && cands.len() == 2, "hit: scores {s:?}");
    // exact-pattern hit with no matching candidate injects the instantiation
    let mut cands = vec![born.clone()];
    let s = sentence_score(&QuestionPattern::from_text("who is the wife of ⟨E1⟩?"), &[hanks.clone()], &bank, &emb, &store, &mut cands);
    ensure!(s == [0.0, 1.0] && cands.len() == 2, "injection: scores {s:?}");
    ensure!(execute(&cands[1], &store) == BTreeSet::from([Term::id("m.rita_wilson")]), "injected query {}", cands[1]);

    // no bank pattern has three dummies
    let mut cands = vec![born.clone(), spouse.clone()];
    let three = QuestionPattern::from_text("who is the wife of ⟨E1⟩ and ⟨E2⟩ and ⟨E3⟩?");
    let s = sentence_score(&three, &[hanks.clone(), hanks.clone(), hanks.clone()], &bank, &emb, &store, &mut cands);
    ensure!(s == [0.0, 0.0] && cands.len() == 2, "dummy mismatch: scores {s:?}");

    // the closest pattern instantiates to a query with no answers
    let mut cands = vec![born];
    let s = sentence_score(&QuestionPattern::from_text("who is the wife of ⟨E1⟩?"), &[Term::id("m.stephen_king")], &bank, &emb, &store, &mut cands);
    ensure!(s == [0.0] && cands.len() == 1, "empty instantiation: scores {s:?}");
    Ok(String::new())
}

// ---------------------------------------------------------------- 9

fn ablation_plumbing() -> Check {
    let cfg = PipelineConfig::load(&data("config.toml")).map_err(|e| e.to_string())?;
    let test = load_dataset(&data("test.jsonl")).map_err(|e| e.to_string())?;
    ensure!(test.len() == 25, "{} test questions", test.len());
    let full = Pipeline::load(&cfg).map_err(|e| e.to_string())?;
    full.check_ready().map_err(|e| e.to_string())?;
    let result = evaluate(&full, &test);
    ensure!(result.aggregate.mean_f1 == 1.0, "full configuration mean F1 {}", result.aggregate.mean_f1);
    let base: Vec<Answer> = test.iter().map(|r| full.answer_question(&r.id, &r.text)).collect();

    for flag in ["skeleton_parsing", "sentence_scorer", "word_scorer"] {
        let mut c = cfg.clone();
        c.ablation.disable(flag).map_err(|e| e.to_string())?;
        let p = Pipeline::load(&c).map_err(|e| e.to_string())?;
        p.check_ready().map_err(|e| e.to_string())?;
        let r = evaluate(&p, &test);
        ensure!(r.records.len() == test.len(), "{flag}: {} records", r.records.len());
        for (rec, b) in test.iter().zip(&base) {
            let a = p.answer_question(&rec.id, &rec.text);
            let (t, bt) = (&a.trace, &b.trace);
            let id = &rec.id;
            match flag {
                "skeleton_parsing" => {
                    let dep = t.dependency.as_ref().ok_or(format!("{id}: no dependency tree"))?;
                    let bdep = bt.dependency.as_ref().unwrap();
                    ensure!(t.skeleton.is_none(), "{id}: skeleton parsed while disabled");
                    ensure!(dep.tokens == bdep.tokens && dep.validate().is_ok(), "{id}: dependency input differs in form");
                    ensure!(t.mentions == bt.mentions, "{id}: node recognition changed");
                }
                "sentence_scorer" => {
                    ensure!(
                        t.skeleton == bt.skeleton
                            && t.dependency == bt.dependency
                            && t.mentions == bt.mentions
                            && t.ungrounded == bt.ungrounded
                            && t.candidates == bt.candidates,
                        "{id}: stages before scoring changed"
                    );
                    ensure!(!t.injected && a.ranking.iter().all(|x| x.sentence == 0.0), "{id}: sentence scores present");
                }
                _ => {
                    ensure!(t == bt, "{id}: trace changed");
                    ensure!(a.ranking.iter().all(|x| x.word == 0.0), "{id}: word scores present");
                    let sent = |ans: &Answer| -> BTreeMap<String, f64> {
                        ans.ranking.iter().map(|x| (x.query.canonical_key(), x.sentence)).collect()
                    };
                    ensure!(sent(&a) == sent(b), "{id}: sentence scores changed");
                }
            }
        }
    }
    Ok(String::new())
}

// ----------------------------------------------------------------

fn main() {
    let checks: [(usize, &str, fn() -> Check, Duration); 9] = [
        (1, "running example reproduction", running_example, Duration::from_secs(1)),
        (2, "oracle fidelity on gold skeletons", oracle_fidelity, Duration::from_secs(1)),
        (3, "word scorer forward oracle", forward_oracle, Duration::from_secs(10)),
        (4, "hinge-loss gradient check", gradient_check, Duration::from_secs(30)),
        (5, "word scorer trainability", trainability, Duration::from_secs(60)),
        (6, "execution oracle", execution_oracle, Duration::from_secs(60)),
        (7, "variant enumeration", variant_enumeration, Duration::from_secs(10)),
        (8, "sentence scorer behaviour", sentence_behaviour, Duration::from_secs(1)),
        (9, "ablation plumbing", ablation_plumbing, Duration::from_secs(10)),
    ];
    let mut failed = 0;
    let mut seen = HashSet::new();
    for (n, name, f, budget) in checks {
        assert!(seen.insert(n));
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let took = start.elapsed();
        let outcome = outcome.and_then(|note| {
            if took > budget {
                Err(format!("took {took:.2?}, budget {budget:?}"))
            } else {
                Ok(note)
            }
        });
        match outcome {
            Ok(note) if note.is_empty() => println!("PASS {n:>2} {name} ({took:.2?})"),
            Ok(note) => println!("PASS {n:>2} {name} ({took:.2?}): {note}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {n:>2} {name} ({took:.2?}): {why}");
            }
        }
    }
    println!("SKIP 10 headline benchmark numbers: need full Freebase, large-scale entity linking and fine-tuned BERT");
    if failed > 0 {
        std::process::exit(1);
    }
}
