use serde::{Deserialize, Serialize};

/// One replacement of the code-point range `[start, end)` of the source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub start: usize,
    pub end: usize,
    pub original: String,
    pub replacement: String,
}

/// Audit record of what a transform did to one message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub spec: String,
    pub edits: Vec<Edit>,
    pub failed: bool,
    pub pipeline_version: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("edit {index} overlaps or precedes the previous edit")]
    Unordered { index: usize },
    #[error("edit {index} range {start}..{end} exceeds source length {len}")]
    OutOfBounds {
        index: usize,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("edit {index} expects {expected:?} but source has {found:?}")]
    OriginalMismatch {
        index: usize,
        expected: String,
        found: String,
    },
}

impl TraceRecord {
    pub fn new(spec: impl Into<String>, edits: Vec<Edit>) -> Self {
        Self {
            spec: spec.into(),
            edits,
            failed: false,
            pipeline_version: super::PIPELINE_VERSION.to_owned(),
        }
    }

    /// Re-applies the recorded edits to `source`.
    pub fn replay(&self, source: &str) -> Result<String, ReplayError> {
        replay_edits(source, &self.edits)
    }
}

pub fn replay_edits(source: &str, edits: &[Edit]) -> Result<String, ReplayError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = String::with_capacity(source.len());
    let mut cursor = 0;
    for (index, edit) in edits.iter().enumerate() {
        if edit.start < cursor || edit.end < edit.start {
            return Err(ReplayError::Unordered { index });
        }
        if edit.end > chars.len() {
            return Err(ReplayError::OutOfBounds {
                index,
                start: edit.start,
                end: edit.end,
                len: chars.len(),
            });
        }
        let found: String = chars[edit.start..edit.end].iter().collect();
        if found != edit.original {
            return Err(ReplayError::OriginalMismatch {
                index,
                expected: edit.original.clone(),
                found,
            });
        }
        out.extend(&chars[cursor..edit.start]);
        out.push_str(&edit.replacement);
        cursor = edit.end;
    }
    out.extend(&chars[cursor..]);
    Ok(out)
}
