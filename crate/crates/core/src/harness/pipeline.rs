use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::config::{BackendKind, PipelineConfig};
use super::HarnessError;
use crate::backend::{OracleBackend, ProcedureBackend};
use crate::kb::{execute, ground, AliasDictionary, GroundedQuery, LinkKind, Term, TripleStore};
use crate::query::{enumerate_variants, extract_relations, recognize_nodes, Lexicons, NodeKind, NodeMention, UngroundedQuery};
use crate::scoring::{
    query_bag, question_bag, question_pattern, sentence_score, total_rank, EmbeddingTable, PatternBank,
    WordScorerModel,
};
use crate::text::deps::{span_parses, ParseBank};
use crate::text::gold::load_gold;
use crate::text::{join_dependencies, parse_skeleton, DependencyTree, Question, Skeleton};
use crate::TrainedBackend;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Tokenize,
    Skeleton,
    Dependencies,
    Nodes,
    Relations,
    Grounding,
    Scoring,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: Stage,
    pub message: String,
}

impl StageError {
    fn new(stage: Stage, e: impl fmt::Display) -> Self {
        StageError { stage, message: e.to_string() }
    }
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?}] {}", self.stage, self.message)
    }
}

/// Intermediate results of one question, filled as far as the pipeline got.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub skeleton: Option<Skeleton>,
    pub dependency: Option<DependencyTree>,
    pub mentions: Vec<NodeMention>,
    pub ungrounded: Option<UngroundedQuery>,
    pub variants: usize,
    /// Grounded candidates before scoring, in grounding order.
    pub candidates: Vec<GroundedQuery>,
    /// Whether the sentence scorer added a candidate of its own.
    pub injected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedAnswer {
    pub answers: Vec<String>,
    pub query: GroundedQuery,
    pub sentence: f64,
    pub word: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub id: String,
    pub ranking: Vec<RankedAnswer>,
    pub trace: Trace,
    pub error: Option<StageError>,
}

impl Answer {
    /// The best-ranked candidate that returns something.
    pub fn top(&self) -> Option<&RankedAnswer> {
        self.ranking.iter().find(|r| !r.answers.is_empty())
    }
}

/// Everything up to scoring for one question.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub question: Question,
    pub mentions: Vec<NodeMention>,
    pub candidates: Vec<GroundedQuery>,
}

/// Loaded resources. Read-only once built, so questions can be answered
/// concurrently.
pub struct Pipeline {
    pub config: PipelineConfig,
    pub store: TripleStore,
    pub aliases: AliasDictionary,
    pub lexicons: Lexicons,
    pub embeddings: EmbeddingTable<f64>,
    pub backend: Option<Box<dyn ProcedureBackend + Send + Sync>>,
    pub span_parses: Option<ParseBank>,
    pub sentence_parses: Option<ParseBank>,
    pub bank: Option<PatternBank>,
    pub word_model: Option<WordScorerModel<f64>>,
}

fn required<'a>(p: &'a Option<std::path::PathBuf>, what: &str) -> Result<&'a std::path::Path, HarnessError> {
    p.as_deref().ok_or_else(|| HarnessError::Config(format!("no path configured for {what}")))
}

impl Pipeline {
    /// Loads every configured resource. Missing optional resources stay
    /// `None`; [`Pipeline::check_ready`] tells whether answering is possible.
    pub fn load(config: &PipelineConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let p = &config.paths;
        let store = TripleStore::load(required(&p.store, "the triple store")?)?;
        let aliases = AliasDictionary::load(required(&p.aliases, "the alias file")?)?;
        let mut lexicons = Lexicons::new();
        aliases.extend_lexicons(&mut lexicons);
        if let Some(lex) = &p.lexicon {
            lexicons.load_class_lexicon(lex).map_err(|e| HarnessError::Io(format!("{}: {e}", lex.display())))?;
        }
        let embeddings = match &p.embeddings {
            Some(path) => EmbeddingTable::load(path)?,
            None => EmbeddingTable::new(1),
        };
        let backend: Option<Box<dyn ProcedureBackend + Send + Sync>> = match config.backend {
            BackendKind::Oracle => match &p.gold_skeletons {
                Some(path) => Some(Box::new(OracleBackend::from_gold(&load_gold(path)?)?)),
                None => None,
            },
            BackendKind::Linear => match &p.backend_weights {
                Some(path) => {
                    let emb = p.embeddings.is_some().then(|| embeddings.clone());
                    let b = TrainedBackend::load(path, None).or_else(|_| TrainedBackend::load(path, emb))?;
                    Some(Box::new(b))
                }
                None => None,
            },
        };
        let span_parses = p.span_parses.as_deref().map(ParseBank::load).transpose()?;
        let sentence_parses = p.sentence_parses.as_deref().map(ParseBank::load).transpose()?;
        let bank = p.bank.as_deref().map(PatternBank::load).transpose()?;
        let word_model = match &p.scorer {
            Some(path) => Some(WordScorerModel::load(path, embeddings.clone())?),
            None => None,
        };
        Ok(Pipeline {
            config: config.clone(),
            store,
            aliases,
            lexicons,
            embeddings,
            backend,
            span_parses,
            sentence_parses,
            bank,
            word_model,
        })
    }

    /// Errors when an enabled stage lacks its resource.
    pub fn check_ready(&self) -> Result<(), HarnessError> {
        let a = &self.config.ablation;
        let missing = |what: &str| Err(HarnessError::Config(format!("{what} is enabled but not configured")));
        if a.skeleton_parsing && self.backend.is_none() {
            return missing("skeleton parsing (backend)");
        }
        if !a.skeleton_parsing && self.sentence_parses.is_none() {
            return missing("full-sentence dependency input");
        }
        if a.sentence_scorer && self.bank.is_none() {
            return missing("the sentence scorer (pattern bank)");
        }
        if a.word_scorer && self.word_model.is_none() {
            return missing("the word scorer (checkpoint)");
        }
        Ok(())
    }

    /// The dependency tree fed to relation extraction.
    fn dependency(&self, q: &Question, trace: &mut Trace) -> Result<DependencyTree, StageError> {
        if self.config.ablation.skeleton_parsing {
            let backend = self.backend.as_ref().ok_or_else(|| StageError::new(Stage::Skeleton, "no backend configured"))?;
            let skel = parse_skeleton(q, backend.as_ref()).map_err(|e| StageError::new(Stage::Skeleton, e))?;
            let parses = span_parses(q, &skel, self.span_parses.as_ref());
            trace.skeleton = Some(skel.clone());
            join_dependencies(&skel, &parses, &q.surfaces()).map_err(|e| StageError::new(Stage::Dependencies, e))
        } else {
            let bank = self
                .sentence_parses
                .as_ref()
                .ok_or_else(|| StageError::new(Stage::Dependencies, "no full-sentence parses configured"))?;
            let tree = bank
                .get(&q.surfaces())
                .ok_or_else(|| StageError::new(Stage::Dependencies, "no full-sentence parse for this question"))?;
            let mut tree = tree.clone();
            tree.tokens = q.surfaces();
            tree.validate().map_err(|e| StageError::new(Stage::Dependencies, e))?;
            Ok(tree)
        }
    }

    /// Tokenize through grounding. Candidates from all variants are
    /// deduplicated up to variable renaming and capped.
    pub fn prepare(&self, id: &str, text: &str, trace: &mut Trace) -> Result<Prepared, StageError> {
        let question = Question::new(id, text).map_err(|e| StageError::new(Stage::Tokenize, e))?;
        let dep = self.dependency(&question, trace)?;
        trace.dependency = Some(dep.clone());
        let mentions = recognize_nodes(&question, &self.lexicons).map_err(|e| StageError::new(Stage::Nodes, e))?;
        trace.mentions = mentions.clone();
        let u = extract_relations(&dep, &mentions).map_err(|e| StageError::new(Stage::Relations, e))?;
        trace.ungrounded = Some(u.clone());
        let variants = enumerate_variants(&u);
        trace.variants = variants.len();
        let limits = self.config.limits;
        let mut seen = HashSet::new();
        let mut candidates = Vec::new();
        'outer: for (vi, v) in variants.iter().enumerate() {
            for g in ground(v, vi, &self.store, &self.aliases, &limits) {
                if seen.insert(g.canonical_key()) {
                    candidates.push(g);
                    if candidates.len() >= limits.max_grounded {
                        break 'outer;
                    }
                }
            }
        }
        trace.candidates = candidates.clone();
        Ok(Prepared { question, mentions, candidates })
    }

    /// Top linked id of every entity mention, in order; None if one fails.
    pub fn linked_entities(&self, mentions: &[NodeMention]) -> Option<Vec<Term>> {
        mentions
            .iter()
            .filter(|m| m.kind == NodeKind::Entity)
            .map(|m| self.aliases.top(&m.surface, LinkKind::Entity, 1).first().map(|c| Term::id(&c.id)))
            .collect()
    }

    /// Sentence and normalized word scores; may append one injected candidate.
    pub fn score(&self, prep: &mut Prepared) -> (Vec<f64>, Vec<f64>, bool) {
        let ab = self.config.ablation;
        let before = prep.candidates.len();
        let sentence = match (&self.bank, ab.sentence_scorer) {
            (Some(bank), true) => {
                let pattern = question_pattern(&prep.question, &prep.mentions);
                match self.linked_entities(&prep.mentions) {
                    Some(ents) => sentence_score(&pattern, &ents, bank, &self.embeddings, &self.store, &mut prep.candidates),
                    None => vec![0.0; before],
                }
            }
            _ => vec![0.0; before],
        };
        let injected = prep.candidates.len() > before;
        let word = match (&self.word_model, ab.word_scorer) {
            (Some(m), true) => match question_bag(&prep.question, &prep.mentions) {
                Ok(qb) => prep
                    .candidates
                    .iter()
                    .map(|c| query_bag(c).map_or(0.0, |pb| m.normalized_score(&qb, &pb)))
                    .collect(),
                Err(_) => vec![0.0; prep.candidates.len()],
            },
            _ => vec![0.0; prep.candidates.len()],
        };
        (sentence, word, injected)
    }

    /// Runs the whole pipeline. A failing stage yields an empty ranking and
    /// the tagged error.
    pub fn answer_question(&self, id: &str, text: &str) -> Answer {
        let mut trace = Trace::default();
        let mut prep = match self.prepare(id, text, &mut trace) {
            Ok(p) => p,
            Err(e) => return Answer { id: id.to_string(), ranking: Vec::new(), trace, error: Some(e) },
        };
        let (sentence, word, injected) = self.score(&mut prep);
        trace.injected = injected;
        let ranked = total_rank(&prep.candidates, &sentence, &word);
        let ranking = ranked
            .into_iter()
            .map(|r| {
                let query = prep.candidates[r.index].clone();
                let answers = execute(&query, &self.store).iter().map(Term::answer_string).collect();
                RankedAnswer { answers, query, sentence: r.sentence, word: r.word, total: r.total }
            })
            .collect::<Vec<_>>();
        let error = ranking
            .is_empty()
            .then(|| StageError::new(Stage::Grounding, "no grounded candidate"));
        Answer { id: id.to_string(), ranking, trace, error }
    }
}
