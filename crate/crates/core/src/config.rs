//! Experiment definition documents (TOML or JSON) with lexicon file references.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ConditionTarget, ConditionTemplate, ExperimentConfig, TaskConfig};
use crate::transform::{
    load_pos_lexicon, load_stopwords, load_swap_map, load_term_list, Lexicon, PosTag, TransformSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    Identity,
    PosRemove,
    StopwordRemove,
    LexiconRemove,
    LexiconSwap,
}

/// One `[[conditions]]` entry. Paths are relative to the document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionDocument {
    pub kind: ConditionKind,
    #[serde(default)]
    pub target: ConditionTarget,
    #[serde(default)]
    pub robust_matching: bool,
    #[serde(default)]
    pub tags: Vec<PosTag>,
    pub lexicon: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    /// Term list file; `lexicon_remove` falls back to `task.terms` without it.
    pub terms: Option<PathBuf>,
    pub swap_map: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentDocument {
    pub name: String,
    pub rounds: usize,
    pub task: TaskConfig,
    /// Display names to register, in schedule order.
    #[serde(default)]
    pub participants: Vec<String>,
    #[serde(default)]
    pub conditions: Vec<ConditionDocument>,
}

impl ExperimentDocument {
    /// Reads a `.json` document, or TOML for any other extension.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Ok(serde_json::from_str(&text)?)
        } else {
            toml::from_str(&text).map_err(|e| Error::validation(format!("{}: {e}", path.display())))
        }
    }

    /// Loads every referenced word list and produces a self-contained config.
    pub fn resolve(&self, base_dir: &Path) -> Result<ExperimentConfig> {
        let conditions = self
            .conditions
            .iter()
            .map(|c| {
                Ok(ConditionTemplate {
                    target: c.target,
                    transform: resolve_transform(c, &self.task, base_dir)?
                        .with_robust_matching(c.robust_matching),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ExperimentConfig {
            name: self.name.clone(),
            rounds: self.rounds,
            task: self.task.clone(),
            conditions,
        })
    }
}

fn required<'a>(value: &'a Option<PathBuf>, key: &str, kind: &str) -> Result<&'a PathBuf> {
    value
        .as_ref()
        .ok_or_else(|| Error::validation(format!("{kind} condition needs `{key}`")))
}

fn resolve_transform(c: &ConditionDocument, task: &TaskConfig, base: &Path) -> Result<TransformSpec> {
    match c.kind {
        ConditionKind::Identity => Ok(TransformSpec::identity()),
        ConditionKind::PosRemove => {
            let entries = load_pos_lexicon(base.join(required(&c.lexicon, "lexicon", "pos_remove")?))?;
            let stopwords = match &c.stopwords {
                Some(path) => load_stopwords(base.join(path))?,
                None => Default::default(),
            };
            let lexicon = Lexicon::new(entries, stopwords, task.terms.clone())?;
            TransformSpec::pos_remove(c.tags.iter().copied(), lexicon)
        }
        ConditionKind::StopwordRemove => {
            let stopwords = load_stopwords(base.join(required(&c.stopwords, "stopwords", "stopword_remove")?))?;
            TransformSpec::stopword_remove(stopwords)
        }
        ConditionKind::LexiconRemove => match &c.terms {
            Some(path) => TransformSpec::lexicon_remove(load_term_list(base.join(path))?),
            None => TransformSpec::lexicon_remove(&task.terms),
        },
        ConditionKind::LexiconSwap => Ok(TransformSpec::lexicon_swap(load_swap_map(
            base.join(required(&c.swap_map, "swap_map", "lexicon_swap")?),
        )?)),
    }
}
