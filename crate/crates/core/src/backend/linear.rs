//! Averaged-perceptron implementation of the four procedures.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::features::{featurize, head_features, span_features};
use super::instances::{Procedure, TrainingInstance};
use super::{procedure_accuracy, BackendError, ProcedureAccuracy, ProcedureBackend, MAX_SEQUENCE};
use crate::scalar::Scalar;
use crate::scoring::EmbeddingTable;
use crate::text::{AttachmentLabel, TokenSpan, WorkingSentence};

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 100, seed: 13 }
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("no training instances for the {0:?} procedure")]
    MissingProcedureData(Procedure),
}

#[derive(Debug, Error)]
pub enum WeightsError {
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed weights file: {0}")]
    Format(#[from] serde_json::Error),
    #[error("unsupported weights version {0}")]
    Version(u32),
    #[error("weights expect {expected}-dim embeddings, got {got:?}")]
    Embeddings { expected: usize, got: Option<usize> },
}

type Feats<S> = Vec<(u32, S)>;

#[derive(Default)]
struct Interner {
    ids: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.ids.insert(name.to_string(), id);
        self.names.push(name.to_string());
        id
    }
}

fn score<S: Scalar>(w: &[S], f: &[(u32, S)]) -> S {
    f.iter().map(|&(i, v)| w.get(i as usize).map_or(S::zero(), |&x| x * v)).sum()
}

/// Weight vector with the running sum needed for averaging.
struct Averaged<S> {
    w: Vec<S>,
    u: Vec<S>,
}

impl<S: Scalar> Averaged<S> {
    fn new(dim: usize) -> Self {
        Averaged { w: vec![S::zero(); dim], u: vec![S::zero(); dim] }
    }

    fn update(&mut self, f: &[(u32, S)], step: S, c: S) {
        for &(i, v) in f {
            self.w[i as usize] += step * v;
            self.u[i as usize] += c * step * v;
        }
    }

    fn finish(self, c: S) -> Vec<S> {
        self.w.iter().zip(&self.u).map(|(&w, &u)| w - u / c).collect()
    }
}

/// Four independent linear models over one shared feature vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearBackend<S> {
    vocab: HashMap<String, u32>,
    names: Vec<String>,
    split: Vec<S>,
    span: Vec<S>,
    head: Vec<S>,
    relation: Vec<Vec<S>>,
    embeddings: Option<EmbeddingTable<S>>,
    /// Agreement on the training instances, filled in by training.
    pub training_accuracy: Option<ProcedureAccuracy>,
}

fn check_len(n: usize) -> Result<(), BackendError> {
    if n > MAX_SEQUENCE {
        Err(BackendError::SequenceTooLong { len: n, max: MAX_SEQUENCE })
    } else {
        Ok(())
    }
}

fn proper_spans(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..n).flat_map(move |len| (0..=n - len).map(move |s| (s, s + len)))
}

impl<S: Scalar> LinearBackend<S> {
    fn lookup<'a>(&self, names: impl IntoIterator<Item = (&'a str, S)>) -> Feats<S> {
        names
            .into_iter()
            .filter_map(|(n, v)| self.vocab.get(n).map(|&i| (i, v)))
            .collect()
    }

    fn split_feats(&self, words: &[String]) -> Feats<S> {
        let f = featurize(words, None, self.embeddings.as_ref());
        self.lookup(f.iter().map(|(k, &v)| (k.as_str(), S::lit(v))))
    }

    fn relation_feats(&self, span: &[String], rest: &[String]) -> Feats<S> {
        let f = featurize(span, Some(rest), self.embeddings.as_ref());
        self.lookup(f.iter().map(|(k, &v)| (k.as_str(), S::lit(v))))
    }

    fn binary(&self, names: &[String]) -> Feats<S> {
        self.lookup(names.iter().map(|k| (k.as_str(), S::one())))
    }

    pub fn vocabulary_size(&self) -> usize {
        self.names.len()
    }

    pub fn uses_embeddings(&self) -> bool {
        self.embeddings.is_some()
    }

    /// Serializes weights with their vocabulary, dropping features that carry
    /// no weight in any of the four models.
    pub fn to_json(&self) -> String {
        let mut keep: Vec<usize> = (0..self.names.len())
            .filter(|&i| {
                let nz = |w: &Vec<S>| w.get(i).is_some_and(|x| !x.is_zero());
                nz(&self.split) || nz(&self.span) || nz(&self.head) || self.relation.iter().any(nz)
            })
            .collect();
        keep.sort_by(|&a, &b| self.names[a].cmp(&self.names[b]));
        let sparse = |w: &Vec<S>| -> Vec<(u32, f64)> {
            keep.iter()
                .enumerate()
                .filter_map(|(new, &old)| {
                    let x = w.get(old).copied().unwrap_or_else(S::zero);
                    (!x.is_zero()).then(|| (new as u32, x.as_f64()))
                })
                .collect()
        };
        let file = WeightsFile {
            version: FORMAT_VERSION,
            embedding_dim: self.embeddings.as_ref().map(EmbeddingTable::dim),
            vocabulary: keep.iter().map(|&i| self.names[i].clone()).collect(),
            split: sparse(&self.split),
            span: sparse(&self.span),
            head: sparse(&self.head),
            relation: self.relation.iter().map(sparse).collect(),
            training_accuracy: self.training_accuracy,
        };
        serde_json::to_string(&file).expect("weights serialize")
    }

    pub fn from_json(text: &str, embeddings: Option<EmbeddingTable<S>>) -> Result<Self, WeightsError> {
        let file: WeightsFile = serde_json::from_str(text)?;
        if file.version != FORMAT_VERSION {
            return Err(WeightsError::Version(file.version));
        }
        let got = embeddings.as_ref().map(EmbeddingTable::dim);
        let embeddings = match file.embedding_dim {
            None => None,
            Some(d) if got == Some(d) => embeddings,
            Some(d) => return Err(WeightsError::Embeddings { expected: d, got }),
        };
        let dim = file.vocabulary.len();
        let dense = |sp: &[(u32, f64)]| {
            let mut w = vec![S::zero(); dim];
            for &(i, x) in sp {
                if let Some(slot) = w.get_mut(i as usize) {
                    *slot = S::lit(x);
                }
            }
            w
        };
        let mut relation: Vec<Vec<S>> = file.relation.iter().map(|r| dense(r)).collect();
        relation.resize(AttachmentLabel::ALL.len(), vec![S::zero(); dim]);
        Ok(LinearBackend {
            vocab: file.vocabulary.iter().enumerate().map(|(i, n)| (n.clone(), i as u32)).collect(),
            split: dense(&file.split),
            span: dense(&file.span),
            head: dense(&file.head),
            relation,
            names: file.vocabulary,
            embeddings,
            training_accuracy: file.training_accuracy,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), WeightsError> {
        std::fs::write(path, self.to_json())
            .map_err(|source| WeightsError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: &Path, embeddings: Option<EmbeddingTable<S>>) -> Result<Self, WeightsError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| WeightsError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text, embeddings)
    }
}

#[derive(Serialize, Deserialize)]
struct WeightsFile {
    version: u32,
    embedding_dim: Option<usize>,
    vocabulary: Vec<String>,
    split: Vec<(u32, f64)>,
    span: Vec<(u32, f64)>,
    head: Vec<(u32, f64)>,
    relation: Vec<Vec<(u32, f64)>>,
    training_accuracy: Option<ProcedureAccuracy>,
}

impl<S: Scalar> ProcedureBackend for LinearBackend<S> {
    fn split_decision(&self, s: &WorkingSentence) -> Result<bool, BackendError> {
        check_len(s.len())?;
        Ok(score(&self.split, &self.split_feats(&s.tokens)) > S::zero())
    }

    fn predict_span(&self, s: &WorkingSentence) -> Result<TokenSpan, BackendError> {
        check_len(s.len())?;
        let mut best: Option<(S, TokenSpan)> = None;
        // shorter spans come first, then leftmost, so strict `>` keeps the tie rule
        for (a, b) in proper_spans(s.len()) {
            let v = score(&self.span, &self.binary(&span_features(&s.tokens, a, b)));
            if best.is_none_or(|(bv, _)| v > bv) {
                best = Some((v, TokenSpan::new(a, b)));
            }
        }
        best.map(|(_, sp)| sp).ok_or(BackendError::NoCandidate)
    }

    fn identify_headword(&self, span: &[String], r: &WorkingSentence) -> Result<usize, BackendError> {
        check_len(span.len() + r.len())?;
        let mut best: Option<(S, usize)> = None;
        for i in 0..r.len() {
            let v = score(&self.head, &self.binary(&head_features(span, &r.tokens, i)));
            if best.is_none_or(|(bv, _)| v > bv) {
                best = Some((v, i));
            }
        }
        best.map(|(_, i)| i).ok_or(BackendError::NoCandidate)
    }

    fn classify_relation(&self, span: &[String], r: &WorkingSentence) -> Result<AttachmentLabel, BackendError> {
        check_len(span.len() + r.len())?;
        let f = self.relation_feats(span, &r.tokens);
        Ok(argmax_label(&self.relation, &f))
    }
}

fn argmax_label<S: Scalar>(w: &[Vec<S>], f: &[(u32, S)]) -> AttachmentLabel {
    let mut best = (score(&w[0], f), 0);
    for (k, wk) in w.iter().enumerate().skip(1) {
        let v = score(wk, f);
        if v > best.0 {
            best = (v, k);
        }
    }
    AttachmentLabel::ALL[best.1]
}

fn argmax<S: Scalar>(w: &[S], cands: &[Feats<S>]) -> usize {
    let mut best = (score(w, &cands[0]), 0);
    for (k, c) in cands.iter().enumerate().skip(1) {
        let v = score(w, c);
        if v > best.0 {
            best = (v, k);
        }
    }
    best.1
}

fn intern_all<S: Scalar>(int: &mut Interner, f: impl IntoIterator<Item = (String, f64)>) -> Feats<S> {
    f.into_iter().map(|(k, v)| (int.intern(&k), S::lit(v))).collect()
}

fn intern_binary<S: Scalar>(int: &mut Interner, f: Vec<String>) -> Feats<S> {
    f.into_iter().map(|k| (int.intern(&k), S::one())).collect()
}

/// Candidate set for a structured decision with the index of the gold one.
struct Structured<S> {
    cands: Vec<Feats<S>>,
    gold: usize,
}

/// Trains the four models with the averaged perceptron. Instances longer
/// than the sequence limit are skipped.
pub fn train_backend<S: Scalar>(
    instances: &[TrainingInstance],
    config: &TrainConfig,
    embeddings: Option<&EmbeddingTable<S>>,
) -> Result<LinearBackend<S>, TrainError> {
    for p in [Procedure::Split, Procedure::Span, Procedure::Headword, Procedure::Relation] {
        if !instances.iter().any(|i| i.procedure() == p) {
            return Err(TrainError::MissingProcedureData(p));
        }
    }
    let mut int = Interner::default();
    let mut split: Vec<(Feats<S>, bool)> = Vec::new();
    let mut span: Vec<Structured<S>> = Vec::new();
    let mut head: Vec<Structured<S>> = Vec::new();
    let mut relation: Vec<(Feats<S>, usize)> = Vec::new();
    let mut skipped = 0;
    for inst in instances {
        match inst {
            TrainingInstance::Split { sentence, split: y, .. } => {
                if sentence.len() > MAX_SEQUENCE {
                    skipped += 1;
                    continue;
                }
                split.push((intern_all(&mut int, featurize(sentence, None, embeddings)), *y));
            }
            TrainingInstance::Span { sentence, span: gold, .. } => {
                if sentence.len() > MAX_SEQUENCE {
                    skipped += 1;
                    continue;
                }
                let mut cands = Vec::new();
                let mut gi = None;
                for (a, b) in proper_spans(sentence.len()) {
                    if TokenSpan::new(a, b) == *gold {
                        gi = Some(cands.len());
                    }
                    cands.push(intern_binary(&mut int, span_features(sentence, a, b)));
                }
                match gi {
                    Some(gold) => span.push(Structured { cands, gold }),
                    None => skipped += 1,
                }
            }
            TrainingInstance::Headword { span: sp, remaining, head: gold, .. } => {
                if sp.len() + remaining.len() > MAX_SEQUENCE || *gold >= remaining.len() {
                    skipped += 1;
                    continue;
                }
                let cands = (0..remaining.len()).map(|i| intern_binary(&mut int, head_features(sp, remaining, i))).collect();
                head.push(Structured { cands, gold: *gold });
            }
            TrainingInstance::Relation { span: sp, remaining, label, .. } => {
                if sp.len() + remaining.len() > MAX_SEQUENCE {
                    skipped += 1;
                    continue;
                }
                relation.push((intern_all(&mut int, featurize(sp, Some(remaining), embeddings)), label.index()));
            }
        }
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} training instances over the sequence limit");
    }
    let dim = int.names.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let shuffled = |n: usize, rng: &mut ChaCha8Rng| {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        order
    };

    let mut w_split = Averaged::new(dim);
    let mut w_span = Averaged::new(dim);
    let mut w_head = Averaged::new(dim);
    let mut w_rel: Vec<Averaged<S>> = (0..AttachmentLabel::ALL.len()).map(|_| Averaged::new(dim)).collect();
    let (mut c_split, mut c_span, mut c_head, mut c_rel) = (S::one(), S::one(), S::one(), S::one());

    for _ in 0..config.epochs {
        for i in shuffled(split.len(), &mut rng) {
            let (f, y) = &split[i];
            if (score(&w_split.w, f) > S::zero()) != *y {
                let step = if *y { S::one() } else { -S::one() };
                w_split.update(f, step, c_split);
            }
            c_split += S::one();
        }
        for (model, data, c) in [(&mut w_span, &span, &mut c_span), (&mut w_head, &head, &mut c_head)] {
            for i in shuffled(data.len(), &mut rng) {
                let inst = &data[i];
                let pred = argmax(&model.w, &inst.cands);
                if pred != inst.gold {
                    model.update(&inst.cands[inst.gold], S::one(), *c);
                    model.update(&inst.cands[pred], -S::one(), *c);
                }
                *c += S::one();
            }
        }
        for i in shuffled(relation.len(), &mut rng) {
            let (f, gold) = &relation[i];
            let mut best = (score(&w_rel[0].w, f), 0);
            for (k, wk) in w_rel.iter().enumerate().skip(1) {
                let v = score(&wk.w, f);
                if v > best.0 {
                    best = (v, k);
                }
            }
            if best.1 != *gold {
                w_rel[*gold].update(f, S::one(), c_rel);
                w_rel[best.1].update(f, -S::one(), c_rel);
            }
            c_rel += S::one();
        }
    }

    let mut backend = LinearBackend {
        vocab: int.ids,
        names: int.names,
        split: w_split.finish(c_split),
        span: w_span.finish(c_span),
        head: w_head.finish(c_head),
        relation: w_rel.into_iter().map(|w| w.finish(c_rel)).collect(),
        embeddings: embeddings.cloned(),
        training_accuracy: None,
    };
    let acc = procedure_accuracy(&backend, instances);
    log::info!(
        "training accuracy: split {:.3} span {:.3} headword {:.3} relation {:.3}",
        acc.split.rate(),
        acc.span.rate(),
        acc.headword.rate(),
        acc.relation.rate()
    );
    backend.training_accuracy = Some(acc);
    Ok(backend)
}
