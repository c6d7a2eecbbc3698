use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use thiserror::Error;

use super::{Term, Triple, TYPE_PREDICATE};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Deduplicated triples with subject, predicate-object, subject-predicate
/// and predicate indexes.
#[derive(Debug, Clone, Default)]
pub struct TripleStore {
    triples: Vec<Triple>,
    by_s: HashMap<String, Vec<usize>>,
    by_po: HashMap<(String, Term), Vec<usize>>,
    by_sp: HashMap<(String, String), Vec<usize>>,
    by_p: HashMap<String, Vec<usize>>,
    predicates: Vec<String>,
    mediator_classes: BTreeSet<String>,
}

fn parse_line(line: &str) -> Result<Triple, String> {
    let mut parts = line.splitn(3, '\t');
    let (Some(s), Some(p), Some(o)) = (parts.next(), parts.next(), parts.next()) else {
        return Err("expected three tab-separated fields".into());
    };
    let (s, p) = (s.trim(), p.trim());
    if s.is_empty() || p.is_empty() || s.starts_with('"') {
        return Err("subject and predicate must be kb ids".into());
    }
    Ok(Triple::new(s, p, Term::parse(o)?))
}

impl TripleStore {
    pub fn from_triples(triples: impl IntoIterator<Item = Triple>, mediator_classes: impl IntoIterator<Item = String>) -> Self {
        let set: BTreeSet<Triple> = triples.into_iter().collect();
        let mut st = TripleStore {
            triples: set.into_iter().collect(),
            mediator_classes: mediator_classes.into_iter().collect(),
            ..Default::default()
        };
        for (i, t) in st.triples.iter().enumerate() {
            st.by_s.entry(t.s.clone()).or_default().push(i);
            st.by_po.entry((t.p.clone(), t.o.clone())).or_default().push(i);
            st.by_sp.entry((t.s.clone(), t.p.clone())).or_default().push(i);
            st.by_p.entry(t.p.clone()).or_default().push(i);
        }
        let mut preds: Vec<String> = st.by_p.keys().cloned().collect();
        preds.sort();
        st.predicates = preds;
        st
    }

    /// Strict parse: the first malformed line is an error.
    pub fn parse(text: &str) -> Result<Self, StoreError> {
        let (store, bad) = Self::parse_lenient(text);
        match bad.into_iter().next() {
            Some((line, msg)) => Err(StoreError::Parse { line, msg }),
            None => Ok(store),
        }
    }

    /// Loads every well-formed line and reports the malformed ones.
    pub fn parse_lenient(text: &str) -> (Self, Vec<(usize, String)>) {
        let mut triples = Vec::new();
        let mut mediators = Vec::new();
        let mut bad = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix("#mediator-class") {
                match rest.trim() {
                    "" => bad.push((no + 1, "mediator-class header without an id".to_string())),
                    id => mediators.push(id.to_string()),
                }
                continue;
            }
            if trimmed.starts_with('#') {
                continue;
            }
            match parse_line(line) {
                Ok(t) => triples.push(t),
                Err(msg) => bad.push((no + 1, msg)),
            }
        }
        (Self::from_triples(triples, mediators), bad)
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| StoreError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.triples.binary_search(t).is_ok()
    }

    /// Distinct predicates in sorted order.
    pub fn predicates(&self) -> &[String] {
        &self.predicates
    }

    pub fn mediator_classes(&self) -> &BTreeSet<String> {
        &self.mediator_classes
    }

    fn pick<'a>(&'a self, idx: Option<&'a Vec<usize>>) -> impl Iterator<Item = &'a Triple> + 'a {
        idx.into_iter().flatten().map(move |&i| &self.triples[i])
    }

    pub fn by_subject<'a>(&'a self, s: &str) -> impl Iterator<Item = &'a Triple> + 'a {
        self.pick(self.by_s.get(s))
    }

    pub fn by_predicate_object<'a>(&'a self, p: &str, o: &Term) -> impl Iterator<Item = &'a Triple> + 'a {
        self.pick(self.by_po.get(&(p.to_string(), o.clone())))
    }

    pub fn by_subject_predicate<'a>(&'a self, s: &str, p: &str) -> impl Iterator<Item = &'a Triple> + 'a {
        self.pick(self.by_sp.get(&(s.to_string(), p.to_string())))
    }

    pub fn by_predicate<'a>(&'a self, p: &str) -> impl Iterator<Item = &'a Triple> + 'a {
        self.pick(self.by_p.get(p))
    }

    /// Triples matching any combination of bound positions, via the most
    /// selective index.
    pub fn matching<'a>(&'a self, s: Option<&str>, p: Option<&str>, o: Option<&Term>) -> Vec<&'a Triple> {
        let base: Box<dyn Iterator<Item = &Triple>> = match (s, p, o) {
            (Some(s), Some(p), _) => Box::new(self.by_subject_predicate(s, p)),
            (None, Some(p), Some(o)) => Box::new(self.by_predicate_object(p, o)),
            (Some(s), None, _) => Box::new(self.by_subject(s)),
            (None, Some(p), None) => Box::new(self.by_predicate(p)),
            (None, None, _) => Box::new(self.triples.iter()),
        };
        base.filter(|t| o.is_none_or(|o| &t.o == o) && s.is_none_or(|s| t.s == s) && p.is_none_or(|p| t.p == p))
            .collect()
    }

    pub fn predicate_count(&self, p: &str) -> usize {
        self.by_p.get(p).map_or(0, Vec::len)
    }

    pub fn has_type(&self, id: &str, class: &str) -> bool {
        self.by_subject_predicate(id, TYPE_PREDICATE).any(|t| t.o.as_id() == Some(class))
    }

    pub fn types_of<'a>(&'a self, id: &str) -> impl Iterator<Item = &'a str> + 'a {
        self.by_subject_predicate(id, TYPE_PREDICATE).filter_map(|t| t.o.as_id())
    }

    /// Whether `id` is an instance of a mediator class.
    pub fn is_mediator(&self, id: &str) -> bool {
        self.types_of(id).any(|c| self.mediator_classes.contains(c))
    }
}
