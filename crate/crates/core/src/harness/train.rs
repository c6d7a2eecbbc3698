//! Supervision for the scorers derived from question-answer pairs, and the
//! skeleton evaluation report.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::dataset::DatasetRecord;
use super::evaluate::f1;
use super::pipeline::{Pipeline, Prepared, Trace};
use super::HarnessError;
use crate::backend::{extract_instances, procedure_accuracy, ProcedureAccuracy, ProcedureBackend};
use crate::kb::{execute, Term};
use crate::scoring::{
    query_bag, question_bag, question_pattern, train_word_scorer, PatternBank, WordExample, WordHyper, WordScorerModel,
    WordTrainReport,
};
use crate::text::gold::GoldSkeleton;
use crate::text::{las, parse_skeleton, LasScore};

/// A training question with its candidates and the one that best
/// reproduces the gold answers.
pub struct Supervised {
    pub prepared: Prepared,
    pub positive: usize,
    pub f1: f64,
}

/// Candidate with the highest answer F1 against gold; ties go to fewer
/// patterns, then the smaller rendering. None when nothing overlaps gold.
pub fn supervise(pipeline: &Pipeline, rec: &DatasetRecord) -> Option<Supervised> {
    let prepared = pipeline.prepare(&rec.id, &rec.text, &mut Trace::default()).ok()?;
    let mut best: Option<(usize, f64, usize, String)> = None;
    for (i, c) in prepared.candidates.iter().enumerate() {
        let answers: Vec<String> = execute(c, &pipeline.store).iter().map(Term::answer_string).collect();
        let s = f1(&answers, &rec.gold_answers);
        if s == 0.0 {
            continue;
        }
        let key = (c.patterns.len(), c.to_string());
        let better = match &best {
            None => true,
            Some((_, bs, bl, br)) => s > *bs || (s == *bs && (key.0, &key.1) < (*bl, br)),
        };
        if better {
            best = Some((i, s, key.0, key.1));
        }
    }
    best.map(|(positive, f1, _, _)| Supervised { prepared, positive, f1 })
}

/// Pattern bank from the training questions whose best candidate and
/// entity links are available.
pub fn build_bank(pipeline: &Pipeline, data: &[DatasetRecord]) -> PatternBank {
    let mut bank = PatternBank::default();
    for rec in data {
        let Some(sup) = supervise(pipeline, rec) else {
            log::warn!("{}: no candidate reproduces the gold answers", rec.id);
            continue;
        };
        let p = &sup.prepared;
        let Some(ents) = pipeline.linked_entities(&p.mentions) else { continue };
        let ids: Vec<String> = ents.iter().map(Term::answer_string).collect();
        if !bank.add(question_pattern(&p.question, &p.mentions), &p.candidates[sup.positive], ids) {
            log::warn!("{}: entities do not all appear in the best query", rec.id);
        }
    }
    bank
}

/// Word-scorer examples: the best candidate against the other candidates of
/// the same question.
pub fn word_examples(pipeline: &Pipeline, data: &[DatasetRecord]) -> Vec<WordExample> {
    let mut out = Vec::new();
    for rec in data {
        let Some(sup) = supervise(pipeline, rec) else { continue };
        let p = &sup.prepared;
        let (Ok(question), Ok(positive)) = (question_bag(&p.question, &p.mentions), query_bag(&p.candidates[sup.positive]))
        else {
            continue;
        };
        let negatives = p
            .candidates
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != sup.positive)
            .filter_map(|(_, c)| query_bag(c).ok())
            .collect();
        out.push(WordExample { question, positive, negatives });
    }
    out
}

pub fn train_scorer(
    pipeline: &Pipeline,
    data: &[DatasetRecord],
    hyper: WordHyper,
) -> Result<(WordScorerModel<f64>, WordTrainReport), HarnessError> {
    let examples = word_examples(pipeline, data);
    Ok(train_word_scorer(&examples, pipeline.embeddings.clone(), hyper)?)
}

/// LAS over parsed gold questions plus per-procedure agreement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonReport {
    pub questions: usize,
    pub parse_failures: usize,
    pub las: LasScore,
    pub procedures: ProcedureAccuracy,
}

impl fmt::Display for SkeletonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = |x: f64| format!("{:6.2}%", 100.0 * x);
        writeln!(f, "{:<36} {}", "Split", pct(self.procedures.split.rate()))?;
        writeln!(f, "{:<36} {}", "Text Span Prediction", pct(self.procedures.span.rate()))?;
        writeln!(f, "{:<36} {}", "Headword Identification", pct(self.procedures.headword.rate()))?;
        writeln!(f, "{:<36} {}", "Attachment Relation Classification", pct(self.procedures.relation.rate()))?;
        write!(f, "{:<36} {}  ({} questions, {} parse failures)", "LAS", pct(self.las.value()), self.questions, self.parse_failures)
    }
}

/// Parses every gold question with `backend`. A failed parse predicts no
/// attachments, so its gold attachments count as misses.
pub fn eval_skeletons<B: ProcedureBackend + ?Sized>(gold: &[GoldSkeleton], backend: &B) -> Result<SkeletonReport, HarnessError> {
    if gold.is_empty() {
        return Err(HarnessError::EmptyGold);
    }
    let mut total = LasScore { matched: 0, predicted: 0, gold: 0 };
    let mut failures = 0;
    for g in gold {
        match parse_skeleton(&g.question, backend) {
            Ok(pred) => total.add(las(&pred, &g.skeleton).expect("same question")),
            Err(e) => {
                log::warn!("{}: {e}", g.question.id);
                failures += 1;
                total.add(LasScore { matched: 0, predicted: 0, gold: g.skeleton.attachments().count() });
            }
        }
    }
    let instances = extract_instances(gold)?;
    Ok(SkeletonReport { questions: gold.len(), parse_failures: failures, las: total, procedures: procedure_accuracy(backend, &instances) })
}
