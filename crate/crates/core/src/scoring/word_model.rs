//! Word-level matching model: a cosine similarity matrix between question
//! and query bags, row and column max-pooling, two linear maps over the
//! pooled vectors and a linear output layer. Trained with a pairwise hinge
//! loss and Adam; the embeddings stay frozen.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::bags::WordBag;
use super::EmbeddingTable;
use crate::scalar::{cosine, norm, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WordHyper {
    pub n_max: usize,
    pub m_max: usize,
    pub hidden: usize,
    pub margin: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub negatives: usize,
    pub seed: u64,
}

impl Default for WordHyper {
    fn default() -> Self {
        WordHyper {
            n_max: 16,
            m_max: 16,
            hidden: 32,
            margin: 0.5,
            epochs: 30,
            learning_rate: 0.001,
            batch_size: 32,
            negatives: 300,
            seed: 7,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("bag of {len} words exceeds the limit of {max}")]
    BagTooLarge { len: usize, max: usize },
}

#[derive(Debug, Error)]
pub enum WordTrainError {
    #[error("no positive training pairs")]
    NoPositives,
    #[error(transparent)]
    Score(#[from] ScoreError),
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
}

/// Trainable parameters. `w_q` is `hidden x n_max`, `w_p` is
/// `hidden x m_max`, `w_out` has `2 * hidden` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct WordParams<S: Scalar> {
    pub w_q: Vec<Vec<S>>,
    pub b_q: Vec<S>,
    pub w_p: Vec<Vec<S>>,
    pub b_p: Vec<S>,
    pub w_out: Vec<S>,
    pub b_out: S,
}

impl<S: Scalar> WordParams<S> {
    pub fn zeros(hidden: usize, n_max: usize, m_max: usize) -> Self {
        WordParams {
            w_q: vec![vec![S::zero(); n_max]; hidden],
            b_q: vec![S::zero(); hidden],
            w_p: vec![vec![S::zero(); m_max]; hidden],
            b_p: vec![S::zero(); hidden],
            w_out: vec![S::zero(); 2 * hidden],
            b_out: S::zero(),
        }
    }

    /// Uniform in ±1/sqrt(fan_in) for weights, zero biases.
    pub fn init<R: Rng>(hidden: usize, n_max: usize, m_max: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(hidden, n_max, m_max);
        let mut fill = |row: &mut [S], fan_in: usize| {
            let a = 1.0 / (fan_in.max(1) as f64).sqrt();
            row.iter_mut().for_each(|x| *x = S::lit(rng.gen_range(-a..=a)));
        };
        p.w_q.iter_mut().for_each(|r| fill(r, n_max));
        p.w_p.iter_mut().for_each(|r| fill(r, m_max));
        fill(&mut p.w_out, 2 * hidden);
        p
    }

    pub fn hidden(&self) -> usize {
        self.b_q.len()
    }

    pub fn flat(&self) -> Vec<S> {
        let mut v = Vec::new();
        self.w_q.iter().for_each(|r| v.extend_from_slice(r));
        v.extend_from_slice(&self.b_q);
        self.w_p.iter().for_each(|r| v.extend_from_slice(r));
        v.extend_from_slice(&self.b_p);
        v.extend_from_slice(&self.w_out);
        v.push(self.b_out);
        v
    }

    /// Inverse of [`flat`](Self::flat) for parameters of the same shape.
    pub fn set_flat(&mut self, v: &[S]) {
        let mut it = v.iter().copied();
        let mut take = |dst: &mut [S]| dst.iter_mut().for_each(|x| *x = it.next().expect("flat length"));
        self.w_q.iter_mut().for_each(|r| take(r));
        take(&mut self.b_q);
        self.w_p.iter_mut().for_each(|r| take(r));
        take(&mut self.b_p);
        take(&mut self.w_out);
        take(std::slice::from_mut(&mut self.b_out));
    }

    pub fn is_finite(&self) -> bool {
        self.flat().iter().all(|x| x.is_finite())
    }

    fn hidden_q(&self, yq: &[S]) -> Vec<S> {
        self.w_q.iter().zip(&self.b_q).map(|(r, &b)| crate::scalar::dot(r, yq) + b).collect()
    }

    fn hidden_p(&self, yp: &[S]) -> Vec<S> {
        self.w_p.iter().zip(&self.b_p).map(|(r, &b)| crate::scalar::dot(r, yp) + b).collect()
    }

    /// Output score for padded pooled vectors.
    pub fn score_pooled(&self, yq: &[S], yp: &[S]) -> S {
        let h = self.hidden();
        let (hq, hp) = (self.hidden_q(yq), self.hidden_p(yp));
        crate::scalar::dot(&self.w_out[..h], &hq) + crate::scalar::dot(&self.w_out[h..], &hp) + self.b_out
    }

    /// Gradient of [`score_pooled`](Self::score_pooled) with respect to
    /// every parameter.
    pub fn score_gradient(&self, yq: &[S], yp: &[S]) -> Self {
        let h = self.hidden();
        let mut g = Self::zeros(h, yq.len(), yp.len());
        let (hq, hp) = (self.hidden_q(yq), self.hidden_p(yp));
        for k in 0..h {
            let (oq, op) = (self.w_out[k], self.w_out[h + k]);
            g.w_q[k].iter_mut().zip(yq).for_each(|(d, &y)| *d = oq * y);
            g.b_q[k] = oq;
            g.w_p[k].iter_mut().zip(yp).for_each(|(d, &y)| *d = op * y);
            g.b_p[k] = op;
            g.w_out[k] = hq[k];
            g.w_out[h + k] = hp[k];
        }
        g.b_out = S::one();
        g
    }

    /// Hinge loss `max(0, margin - s(pos) + s(neg))` and its gradient.
    pub fn pair_loss(&self, yq: &[S], pos: &[S], neg: &[S], margin: S) -> (S, Self) {
        let l = margin - self.score_pooled(yq, pos) + self.score_pooled(yq, neg);
        let h = self.hidden();
        if l <= S::zero() {
            return (S::zero(), Self::zeros(h, yq.len(), pos.len()));
        }
        let gp = self.score_gradient(yq, pos).flat();
        let gn = self.score_gradient(yq, neg).flat();
        let mut g = Self::zeros(h, yq.len(), pos.len());
        g.set_flat(&gn.iter().zip(&gp).map(|(&n, &p)| n - p).collect::<Vec<_>>());
        (l, g)
    }
}

/// Row and column maxima of the cosine matrix between the bags, each in
/// sorted word order and zero padded to `n_max` and `m_max`.
pub fn pooled<S: Scalar>(
    q: &WordBag,
    p: &WordBag,
    emb: &EmbeddingTable<S>,
    n_max: usize,
    m_max: usize,
) -> Result<(Vec<S>, Vec<S>), ScoreError> {
    if q.len() > n_max {
        return Err(ScoreError::BagTooLarge { len: q.len(), max: n_max });
    }
    if p.len() > m_max {
        return Err(ScoreError::BagTooLarge { len: p.len(), max: m_max });
    }
    let qv: Vec<Vec<S>> = q.words().map(|w| emb.vector(w)).collect();
    let pv: Vec<Vec<S>> = p.words().map(|w| emb.vector(w)).collect();
    let mut yq = vec![S::zero(); n_max];
    let mut yp = vec![S::zero(); m_max];
    for (i, a) in qv.iter().enumerate() {
        for (j, b) in pv.iter().enumerate() {
            let m = cosine(a, b);
            if j == 0 || m > yq[i] {
                yq[i] = m;
            }
            if i == 0 || m > yp[j] {
                yp[j] = m;
            }
        }
    }
    Ok((yq, yp))
}

/// Keeps the `max` words with the largest embedding norm (ties to the
/// lexicographically smaller word).
pub fn fit_bag<S: Scalar>(bag: &WordBag, emb: &EmbeddingTable<S>, max: usize) -> WordBag {
    if bag.len() <= max {
        return bag.clone();
    }
    let mut ws: Vec<(S, &str)> = bag.words().map(|w| (norm(&emb.vector(w)), w)).collect();
    ws.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal).then_with(|| a.1.cmp(b.1)));
    WordBag::new(ws.into_iter().take(max).map(|(_, w)| w.to_string())).expect("max > 0")
}

pub fn sigmoid<S: Scalar>(x: S) -> S {
    S::one() / (S::one() + (-x).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordScorerModel<S: Scalar> {
    pub hyper: WordHyper,
    pub params: WordParams<S>,
    pub embeddings: EmbeddingTable<S>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "")]
struct Checkpoint<S: Scalar> {
    version: u32,
    embedding_dim: usize,
    hyper: WordHyper,
    params: WordParams<S>,
}

impl<S: Scalar> WordScorerModel<S> {
    /// Seeded initialization; what training starts from.
    pub fn init(hyper: WordHyper, embeddings: EmbeddingTable<S>) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
        let params = WordParams::init(hyper.hidden, hyper.n_max, hyper.m_max, &mut rng);
        WordScorerModel { hyper, params, embeddings }
    }

    pub fn pooled(&self, q: &WordBag, p: &WordBag) -> Result<(Vec<S>, Vec<S>), ScoreError> {
        pooled(q, p, &self.embeddings, self.hyper.n_max, self.hyper.m_max)
    }

    /// Raw linear score.
    pub fn score(&self, q: &WordBag, p: &WordBag) -> Result<S, ScoreError> {
        let (yq, yp) = self.pooled(q, p)?;
        Ok(self.params.score_pooled(&yq, &yp))
    }

    /// Score squashed into (0, 1), after trimming oversized bags.
    pub fn normalized_score(&self, q: &WordBag, p: &WordBag) -> S {
        let q = fit_bag(q, &self.embeddings, self.hyper.n_max);
        let p = fit_bag(p, &self.embeddings, self.hyper.m_max);
        sigmoid(self.score(&q, &p).expect("bags fitted"))
    }

    pub fn to_json(&self) -> String {
        let ck = Checkpoint { version: 1, embedding_dim: self.embeddings.dim(), hyper: self.hyper, params: self.params.clone() };
        serde_json::to_string(&ck).expect("serializable")
    }

    pub fn from_json(text: &str, embeddings: EmbeddingTable<S>) -> Result<Self, CheckpointError> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| CheckpointError::Format(e.to_string()))?;
        let version = v.get("version").and_then(|x| x.as_u64()).unwrap_or(0) as u32;
        if version != 1 {
            return Err(CheckpointError::Version(version));
        }
        let ck: Checkpoint<S> = serde_json::from_value(v).map_err(|e| CheckpointError::Format(e.to_string()))?;
        if ck.embedding_dim != embeddings.dim() {
            return Err(CheckpointError::Format(format!(
                "checkpoint expects {}-dim embeddings, got {}",
                ck.embedding_dim,
                embeddings.dim()
            )));
        }
        let h = ck.hyper.hidden;
        let p = &ck.params;
        let shaped = p.b_q.len() == h
            && p.b_p.len() == h
            && p.w_out.len() == 2 * h
            && p.w_q.len() == h
            && p.w_p.len() == h
            && p.w_q.iter().all(|r| r.len() == ck.hyper.n_max)
            && p.w_p.iter().all(|r| r.len() == ck.hyper.m_max);
        if !shaped || !p.is_finite() {
            return Err(CheckpointError::Format("parameter shapes disagree with hyperparameters".into()));
        }
        Ok(WordScorerModel { hyper: ck.hyper, params: ck.params, embeddings })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let io = |source| CheckpointError::Io { path: path.display().to_string(), source };
        let mut f = std::fs::File::create(path).map_err(io)?;
        f.write_all(self.to_json().as_bytes()).map_err(io)
    }

    pub fn load(path: &Path, embeddings: EmbeddingTable<S>) -> Result<Self, CheckpointError> {
        let text = std::fs::read_to_string(path).map_err(|source| CheckpointError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text, embeddings)
    }
}

/// One question with its correct query bag and the bags of other
/// candidate queries for the same question.
#[derive(Debug, Clone, PartialEq)]
pub struct WordExample {
    pub question: WordBag,
    pub positive: WordBag,
    pub negatives: Vec<WordBag>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WordTrainReport {
    pub pairs: usize,
    pub initial_loss: f64,
    /// Mean hinge loss over all pairs after each epoch.
    pub epoch_losses: Vec<f64>,
}

struct Pair<S> {
    yq: Vec<S>,
    pos: Vec<S>,
    neg: Vec<S>,
}

fn mean_loss<S: Scalar>(params: &WordParams<S>, pairs: &[Pair<S>], margin: S) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let total: f64 = pairs.iter().map(|p| params.pair_loss(&p.yq, &p.pos, &p.neg, margin).0.as_f64()).sum();
    total / pairs.len() as f64
}

struct Adam<S> {
    m: Vec<S>,
    v: Vec<S>,
    t: i32,
    lr: S,
}

impl<S: Scalar> Adam<S> {
    fn new(n: usize, lr: f64) -> Self {
        Adam { m: vec![S::zero(); n], v: vec![S::zero(); n], t: 0, lr: S::lit(lr) }
    }

    fn step(&mut self, theta: &mut [S], grad: &[S]) {
        let (b1, b2, eps) = (S::lit(0.9), S::lit(0.999), S::lit(1e-8));
        self.t += 1;
        let c1 = S::one() - b1.powi(self.t);
        let c2 = S::one() - b2.powi(self.t);
        for i in 0..theta.len() {
            self.m[i] = b1 * self.m[i] + (S::one() - b1) * grad[i];
            self.v[i] = b2 * self.v[i] + (S::one() - b2) * grad[i] * grad[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            theta[i] -= self.lr * mh / (vh.sqrt() + eps);
        }
    }
}

/// Samples up to `hyper.negatives` negatives per example from its own
/// candidates, or from other examples' positives when it has none, then
/// minimizes the mean pairwise hinge loss with Adam over shuffled batches.
pub fn train_word_scorer<S: Scalar>(
    examples: &[WordExample],
    embeddings: EmbeddingTable<S>,
    hyper: WordHyper,
) -> Result<(WordScorerModel<S>, WordTrainReport), WordTrainError> {
    if examples.is_empty() {
        return Err(WordTrainError::NoPositives);
    }
    let mut model = WordScorerModel::init(hyper, embeddings);
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed.wrapping_add(1));
    let fit_q = |b: &WordBag, e: &EmbeddingTable<S>| fit_bag(b, e, hyper.n_max);
    let fit_p = |b: &WordBag, e: &EmbeddingTable<S>| fit_bag(b, e, hyper.m_max);
    let mut pairs = Vec::new();
    for (i, ex) in examples.iter().enumerate() {
        let own: Vec<&WordBag> = ex.negatives.iter().filter(|n| **n != ex.positive).collect();
        let pool: Vec<&WordBag> = if own.is_empty() {
            let mut other: Vec<&WordBag> =
                examples.iter().enumerate().filter(|(j, o)| *j != i && o.positive != ex.positive).map(|(_, o)| &o.positive).collect();
            other.dedup();
            other
        } else {
            own
        };
        let q = fit_q(&ex.question, &model.embeddings);
        let p = fit_p(&ex.positive, &model.embeddings);
        for neg in pool.choose_multiple(&mut rng, hyper.negatives) {
            let n = fit_p(neg, &model.embeddings);
            let (yq, pos) = model.pooled(&q, &p)?;
            let (_, negv) = model.pooled(&q, &n)?;
            pairs.push(Pair { yq, pos, neg: negv });
        }
    }
    let margin = S::lit(hyper.margin);
    let mut report = WordTrainReport { pairs: pairs.len(), initial_loss: mean_loss(&model.params, &pairs, margin), epoch_losses: Vec::new() };
    let mut theta = model.params.flat();
    let mut adam = Adam::new(theta.len(), hyper.learning_rate);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(hyper.batch_size.max(1)) {
            let mut grad = vec![S::zero(); theta.len()];
            for &k in batch {
                let p = &pairs[k];
                let (l, g) = model.params.pair_loss(&p.yq, &p.pos, &p.neg, margin);
                if l > S::zero() {
                    grad.iter_mut().zip(g.flat()).for_each(|(a, b)| *a += b);
                }
            }
            let n = S::from_usize(batch.len()).unwrap();
            grad.iter_mut().for_each(|g| *g /= n);
            adam.step(&mut theta, &grad);
            model.params.set_flat(&theta);
        }
        report.epoch_losses.push(mean_loss(&model.params, &pairs, margin));
    }
    Ok((model, report))
}
