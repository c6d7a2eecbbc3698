use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::DatasetRecord;
use super::pipeline::Pipeline;

/// Harmonic mean of precision and recall; 0 when either set is empty.
pub fn f1<S: AsRef<str>, T: AsRef<str>>(predicted: &[S], gold: &[T]) -> f64 {
    let p: BTreeSet<&str> = predicted.iter().map(AsRef::as_ref).collect();
    let g: BTreeSet<&str> = gold.iter().map(AsRef::as_ref).collect();
    if p.is_empty() || g.is_empty() {
        return 0.0;
    }
    let hit = p.intersection(&g).count() as f64;
    if hit == 0.0 {
        return 0.0;
    }
    let (prec, rec) = (hit / p.len() as f64, hit / g.len() as f64);
    2.0 * prec * rec / (prec + rec)
}

/// Whether the two answer sets share an element.
pub fn hit_at_1<S: AsRef<str>, T: AsRef<str>>(predicted: &[S], gold: &[T]) -> bool {
    predicted.iter().any(|p| gold.iter().any(|g| g.as_ref() == p.as_ref()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionResult {
    pub id: String,
    pub text: String,
    pub predicted: Vec<String>,
    pub gold: Vec<String>,
    pub query: Option<String>,
    pub total_score: Option<f64>,
    pub f1: f64,
    pub p_at_1: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub questions: usize,
    pub answered: usize,
    pub failed: usize,
    pub mean_f1: f64,
    pub p_at_1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub records: Vec<QuestionResult>,
    pub aggregate: Aggregate,
}

impl EvalResult {
    pub fn from_records(records: Vec<QuestionResult>) -> Self {
        let n = records.len();
        let mean = |f: fn(&QuestionResult) -> f64| if n == 0 { 0.0 } else { records.iter().map(f).sum::<f64>() / n as f64 };
        let aggregate = Aggregate {
            questions: n,
            answered: records.iter().filter(|r| !r.predicted.is_empty()).count(),
            failed: records.iter().filter(|r| r.error.is_some()).count(),
            mean_f1: mean(|r| r.f1),
            p_at_1: mean(|r| r.p_at_1),
        };
        EvalResult { records, aggregate }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Answers every record in parallel and scores the top answer set. Results
/// keep dataset order.
pub fn evaluate(pipeline: &Pipeline, data: &[DatasetRecord]) -> EvalResult {
    let records = data
        .par_iter()
        .map(|rec| {
            let ans = pipeline.answer_question(&rec.id, &rec.text);
            let top = ans.top();
            let predicted = top.map(|t| t.answers.clone()).unwrap_or_default();
            QuestionResult {
                id: rec.id.clone(),
                text: rec.text.clone(),
                f1: f1(&predicted, &rec.gold_answers),
                p_at_1: hit_at_1(&predicted, &rec.gold_answers) as u8 as f64,
                query: top.map(|t| t.query.to_string()),
                total_score: top.map(|t| t.total),
                predicted,
                gold: rec.gold_answers.clone(),
                error: ans.error.map(|e| e.to_string()),
            }
        })
        .collect();
    EvalResult::from_records(records)
}
