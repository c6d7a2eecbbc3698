use std::collections::HashMap;

use super::instances::{extract_instances, InstanceError, TrainingInstance};
use super::{BackendError, ProcedureBackend};
use crate::text::gold::GoldSkeleton;
use crate::text::{AttachmentLabel, TokenSpan, WorkingSentence};

/// Replays gold decisions, keyed by question id and working-sentence text.
#[derive(Debug, Clone, Default)]
pub struct OracleBackend {
    split: HashMap<(String, String), bool>,
    span: HashMap<(String, String), TokenSpan>,
    head: HashMap<(String, String, String), usize>,
    relation: HashMap<(String, String, String), AttachmentLabel>,
}

impl OracleBackend {
    pub fn from_gold(bank: &[GoldSkeleton]) -> Result<Self, InstanceError> {
        Ok(Self::from_instances(&extract_instances(bank)?))
    }

    pub fn from_instances(instances: &[TrainingInstance]) -> Self {
        let mut o = OracleBackend::default();
        for inst in instances {
            match inst {
                TrainingInstance::Split { question_id, sentence, split } => {
                    o.split.insert((question_id.clone(), sentence.join(" ")), *split);
                }
                TrainingInstance::Span { question_id, sentence, span } => {
                    o.span.insert((question_id.clone(), sentence.join(" ")), *span);
                }
                TrainingInstance::Headword { question_id, span, remaining, head } => {
                    o.head.insert((question_id.clone(), span.join(" "), remaining.join(" ")), *head);
                }
                TrainingInstance::Relation { question_id, span, remaining, label } => {
                    o.relation.insert((question_id.clone(), span.join(" "), remaining.join(" ")), *label);
                }
            }
        }
        o
    }

    pub fn knows(&self, question_id: &str) -> bool {
        self.split.keys().any(|(q, _)| q == question_id)
    }
}

fn key(s: &WorkingSentence) -> (String, String) {
    (s.question_id.clone(), s.text())
}

fn pair_key(span: &[String], r: &WorkingSentence) -> (String, String, String) {
    (r.question_id.clone(), span.join(" "), r.text())
}

impl ProcedureBackend for OracleBackend {
    fn split_decision(&self, s: &WorkingSentence) -> Result<bool, BackendError> {
        self.split.get(&key(s)).copied().ok_or_else(|| BackendError::Unknown(s.text()))
    }

    fn predict_span(&self, s: &WorkingSentence) -> Result<TokenSpan, BackendError> {
        self.span.get(&key(s)).copied().ok_or_else(|| BackendError::Unknown(s.text()))
    }

    fn identify_headword(&self, span: &[String], r: &WorkingSentence) -> Result<usize, BackendError> {
        self.head.get(&pair_key(span, r)).copied().ok_or_else(|| BackendError::Unknown(span.join(" ")))
    }

    fn classify_relation(&self, span: &[String], r: &WorkingSentence) -> Result<AttachmentLabel, BackendError> {
        self.relation.get(&pair_key(span, r)).copied().ok_or_else(|| BackendError::Unknown(span.join(" ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::procedure_accuracy;
    use crate::text::gold::parse_gold;
    use crate::text::{las, parse_skeleton};

    const RUNNING: &str = r#"{"question_id":"re","text":"what movie that Miley Cyrus acted in had a director named Tom Vaughan?","nodes":[{"spans":[[0,2],[7,10],[13,14]],"parent":-1,"head_token":null,"label":null},{"spans":[[10,13]],"parent":0,"head_token":9,"label":"acl"},{"spans":[[2,7]],"parent":0,"head_token":1,"label":"acl:relcl"}]}"#;

    #[test]
    fn oracle_reconstructs_running_example() {
        let bank = parse_gold(RUNNING).unwrap();
        let oracle = OracleBackend::from_gold(&bank).unwrap();
        let parsed = parse_skeleton(&bank[0].question, &oracle).unwrap();
        assert_eq!(parsed, bank[0].skeleton);
        assert_eq!(las(&parsed, &bank[0].skeleton).unwrap().value(), 1.0);
        let acc = procedure_accuracy(&oracle, &extract_instances(&bank).unwrap());
        assert_eq!(acc.split.rate(), 1.0);
        assert_eq!(acc.span.total, 2);
        assert_eq!(acc.relation.rate(), 1.0);
    }

    #[test]
    fn unknown_question_is_an_error() {
        let oracle = OracleBackend::default();
        let ws = WorkingSentence::from_tokens("zz", vec!["who".into()]);
        assert!(matches!(oracle.split_decision(&ws), Err(BackendError::Unknown(_))));
    }
}
