//! Agent scripts for headless dialogue simulation.
//!
//! ```toml
//! [[agents]]
//! label = "Alice"
//! utterances = [
//!   { text = "Who should jump?" },
//!   { text = "Not the pilot.", after_peer = 1 },
//! ]
//! ```
//!
//! `after_peer = N` holds an utterance until the agent has received N messages from
//! the other members of its conversation.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::tokens::TokensFile;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptFile {
    pub agents: Vec<AgentScript>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentScript {
    pub label: String,
    #[serde(default)]
    pub utterances: Vec<Utterance>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub text: String,
    #[serde(default)]
    pub after_peer: Option<usize>,
}

impl Utterance {
    pub fn wait(&self) -> usize {
        self.after_peer.unwrap_or(0)
    }
}

impl ScriptFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::parse(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let script: Self = toml::from_str(text).map_err(|e| e.to_string())?;
        let mut seen = BTreeSet::new();
        for agent in &script.agents {
            if !seen.insert(agent.label.as_str()) {
                return Err(format!("agent `{}` is scripted twice", agent.label));
            }
        }
        Ok(script)
    }

    /// Every label must belong to a registered participant. Checked before connecting.
    pub fn check_labels(&self, tokens: &TokensFile) -> CliResult<()> {
        let unknown: Vec<&str> = self
            .agents
            .iter()
            .map(|a| a.label.as_str())
            .filter(|label| tokens.entry(label).is_none())
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Invalid(format!(
                "labels not registered in the tokens file: {}",
                unknown.join(", ")
            )))
        }
    }
}

/// Checks one conversation's agents: waits must reference peer messages that exist, and
/// the waits must not deadlock.
pub fn check_group(agents: &[&AgentScript]) -> Result<(), String> {
    let total: usize = agents.iter().map(|a| a.utterances.len()).sum();
    for agent in agents {
        let peers = total - agent.utterances.len();
        if let Some(u) = agent.utterances.iter().find(|u| u.wait() > peers) {
            return Err(format!(
                "`{}` waits for peer message {} but its peers only send {peers}",
                agent.label,
                u.wait()
            ));
        }
    }
    // Dry run: let any unblocked agent speak until nobody can.
    let mut sent: BTreeMap<&str, usize> = agents.iter().map(|a| (a.label.as_str(), 0)).collect();
    let mut progressed = true;
    while progressed {
        progressed = false;
        let snapshot: usize = sent.values().sum();
        for agent in agents {
            let next = sent[agent.label.as_str()];
            let Some(u) = agent.utterances.get(next) else { continue };
            if snapshot - next >= u.wait() {
                *sent.get_mut(agent.label.as_str()).unwrap() += 1;
                progressed = true;
                break;
            }
        }
    }
    match agents.iter().find(|a| sent[a.label.as_str()] < a.utterances.len()) {
        None => Ok(()),
        Some(stuck) => Err(format!(
            "script deadlocks: `{}` never reaches utterance {}",
            stuck.label,
            sent[stuck.label.as_str()] + 1
        )),
    }
}
