use std::fs;
use std::path::Path;

use relaylab_core::{ExperimentId, ParticipantId};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Written by `setup`; the only place participant tokens are kept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokensFile {
    pub experiment_id: ExperimentId,
    pub participants: Vec<TokenEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenEntry {
    pub label: String,
    pub participant_id: ParticipantId,
    pub token: String,
}

impl TokensFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).expect("tokens serialize");
        fs::write(path, text + "\n").map_err(CliError::io(path))
    }

    pub fn entry(&self, label: &str) -> Option<&TokenEntry> {
        self.participants.iter().find(|p| p.label == label)
    }

    pub fn label_of(&self, participant: &ParticipantId) -> Option<&str> {
        self.participants
            .iter()
            .find(|p| &p.participant_id == participant)
            .map(|p| p.label.as_str())
    }
}
