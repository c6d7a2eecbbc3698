use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::kb::GroundLimits;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    /// Replays the gold skeleton file.
    #[default]
    Oracle,
    /// Linear procedure models loaded from a weights file.
    Linear,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub store: Option<PathBuf>,
    pub aliases: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub gold_skeletons: Option<PathBuf>,
    pub backend_weights: Option<PathBuf>,
    pub scorer: Option<PathBuf>,
    pub bank: Option<PathBuf>,
    /// Per-span dependency parses; spans without one get the fallback parse.
    pub span_parses: Option<PathBuf>,
    /// Whole-question parses, used when skeleton parsing is switched off.
    pub sentence_parses: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablation {
    pub skeleton_parsing: bool,
    pub sentence_scorer: bool,
    pub word_scorer: bool,
}

impl Default for Ablation {
    fn default() -> Self {
        Ablation { skeleton_parsing: true, sentence_scorer: true, word_scorer: true }
    }
}

impl Ablation {
    /// Switches off one stage by name.
    pub fn disable(&mut self, flag: &str) -> Result<(), HarnessError> {
        match flag.replace('-', "_").as_str() {
            "skeleton_parsing" | "skeleton" => self.skeleton_parsing = false,
            "sentence_scorer" | "sentence" => self.sentence_scorer = false,
            "word_scorer" | "word" => self.word_scorer = false,
            other => return Err(HarnessError::Config(format!("unknown ablation flag `{other}`"))),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub backend: BackendKind,
    pub paths: Paths,
    pub limits: GroundLimits,
    pub ablation: Ablation,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 13,
            backend: BackendKind::Oracle,
            paths: Paths::default(),
            limits: GroundLimits::default(),
            ablation: Ablation::default(),
        }
    }
}

impl PipelineConfig {
    /// Reads TOML, or JSON when the extension is `.json`. Relative paths are
    /// taken relative to the config file's directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg: PipelineConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?
        };
        cfg.resolve_relative(path.parent().unwrap_or(Path::new(".")));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_relative(&mut self, base: &Path) {
        let p = &mut self.paths;
        for slot in [
            &mut p.store,
            &mut p.aliases,
            &mut p.lexicon,
            &mut p.embeddings,
            &mut p.gold_skeletons,
            &mut p.backend_weights,
            &mut p.scorer,
            &mut p.bank,
            &mut p.span_parses,
            &mut p.sentence_parses,
        ] {
            if let Some(path) = slot {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !self.ablation.sentence_scorer && !self.ablation.word_scorer {
            return Err(HarnessError::Config("at least one scorer must stay enabled".into()));
        }
        Ok(())
    }
}
