use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;

/// One dataset line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    pub id: String,
    pub text: String,
    pub gold_answers: Vec<String>,
    /// Gold entity mention spans as token ranges. Accepted for compatibility;
    /// the pipeline recognizes mentions itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entities: Option<Vec<(usize, usize)>>,
}

pub fn parse_dataset(text: &str) -> Result<Vec<DatasetRecord>, HarnessError> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let schema = |msg: String| HarnessError::Schema { line: no + 1, msg };
        let rec: DatasetRecord = serde_json::from_str(line).map_err(|e| schema(e.to_string()))?;
        if rec.id.is_empty() || rec.text.trim().is_empty() {
            return Err(schema("empty id or text".into()));
        }
        if !ids.insert(rec.id.clone()) {
            return Err(schema(format!("duplicate id `{}`", rec.id)));
        }
        if let Some(spans) = &rec.entities {
            if spans.iter().any(|(s, e)| s >= e) {
                return Err(schema("entity spans must be non-empty".into()));
            }
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn load_dataset(path: &Path) -> Result<Vec<DatasetRecord>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    parse_dataset(&text)
}
