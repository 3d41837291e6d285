//! Canonical JSONL export of every room view, and the inverse used to rebuild views.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{ConversationId, ExperimentId, MessageId, ParticipantId};
use crate::model::{format_ts, ViewEvent, ViewEventKind};
use crate::platform::Platform;
use crate::store;
use crate::transform::Edit;

/// One line of the export. Field order is part of the format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportRecord {
    pub conversation_id: ConversationId,
    pub seq: u64,
    pub view_owner: ParticipantId,
    /// Author shown to the view owner; `null` for system events.
    pub author_persona: Option<String>,
    pub body: String,
    /// Canonical text, present only on events delivered from another participant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original_body: Option<String>,
    pub transform_kind: Option<String>,
    pub edits: Vec<Edit>,
    pub server_ts: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExportOptions {
    /// Replace display names with stable pseudonyms (`participant-01`, ...).
    pub redact_names: bool,
}

/// What a view owner sees for one event; the comparison unit for replay checks.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ViewLine {
    pub seq: u64,
    pub author: Option<String>,
    pub body: String,
    pub server_ts: String,
}

impl From<&ViewEvent> for ViewLine {
    fn from(event: &ViewEvent) -> Self {
        Self {
            seq: event.seq,
            author: event.author_name.clone(),
            body: event.body.clone(),
            server_ts: format_ts(&event.server_ts),
        }
    }
}

impl From<&ExportRecord> for ViewLine {
    fn from(record: &ExportRecord) -> Self {
        Self {
            seq: record.seq,
            author: record.author_persona.clone(),
            body: record.body.clone(),
            server_ts: record.server_ts.clone(),
        }
    }
}

pub type ViewKey = (ConversationId, ParticipantId);

impl Platform {
    pub fn export_records(&self, experiment: &ExperimentId, options: ExportOptions) -> Result<Vec<ExportRecord>> {
        self.store.read(|conn| {
            store::experiment(conn, experiment)?;
            let names: BTreeMap<ParticipantId, String> = if options.redact_names {
                store::participants(conn, experiment)?
                    .into_iter()
                    .enumerate()
                    .map(|(i, p)| (p.id, format!("participant-{:02}", i + 1)))
                    .collect()
            } else {
                store::display_names(conn, experiment)?
            };
            let mut conversations = store::conversations(conn, experiment)?;
            conversations.sort_by(|a, b| a.0.id.cmp(&b.0.id));

            let mut records = Vec::new();
            for (conv, condition) in conversations {
                let originals: BTreeMap<MessageId, String> = store::messages(conn, &conv.id)?
                    .into_iter()
                    .map(|m| (m.id, m.body))
                    .collect();
                let mut events = store::conversation_view_events(conn, &conv.id)?;
                events.sort_by(|a, b| a.owner.cmp(&b.owner).then(a.seq.cmp(&b.seq)));
                for event in events {
                    let author_persona = event.author.as_ref().and_then(|a| names.get(a).cloned());
                    let mut record = ExportRecord {
                        conversation_id: event.conversation_id.clone(),
                        seq: event.seq,
                        view_owner: event.owner.clone(),
                        author_persona,
                        body: event.body.clone(),
                        original_body: None,
                        transform_kind: None,
                        edits: Vec::new(),
                        server_ts: format_ts(&event.server_ts),
                    };
                    let delivered = event.kind == ViewEventKind::Message && event.author.as_ref() != Some(&event.owner);
                    if delivered {
                        let message_id = event
                            .message_id
                            .as_ref()
                            .ok_or_else(|| Error::Integrity("delivered event without message id".into()))?;
                        record.original_body = originals.get(message_id).cloned();
                        record.transform_kind = condition.get(&event.owner).map(|s| s.kind.name().to_owned());
                        record.edits = store::deliveries(conn, message_id)?
                            .into_iter()
                            .find(|d| d.recipient == event.owner)
                            .map(|d| d.transform_trace.edits)
                            .unwrap_or_default();
                    }
                    records.push(record);
                }
            }
            Ok(records)
        })
    }

    /// Writes the export as JSON lines and returns the number of lines written.
    pub fn export_transcripts(
        &self,
        experiment: &ExperimentId,
        destination: &mut impl Write,
        options: ExportOptions,
    ) -> Result<usize> {
        let records = self.export_records(experiment, options)?;
        for record in &records {
            serde_json::to_writer(&mut *destination, record)?;
            destination.write_all(b"\n")?;
        }
        destination.flush()?;
        Ok(records.len())
    }

    /// Current room views of an experiment, as seen through the participant read path.
    pub fn live_views(&self, experiment: &ExperimentId) -> Result<BTreeMap<ViewKey, Vec<ViewLine>>> {
        let mut views = BTreeMap::new();
        for summary in self.conversations(experiment)? {
            let conv = summary.conversation;
            for owner in &conv.participant_ids {
                let lines = self
                    .fetch_backlog_as(owner, &conv.id, 0)?
                    .iter()
                    .map(ViewLine::from)
                    .collect();
                views.insert((conv.id.clone(), owner.clone()), lines);
            }
        }
        Ok(views)
    }
}

/// Parses an export stream back into per-view event lists.
pub fn rebuild_views(reader: impl BufRead) -> Result<BTreeMap<ViewKey, Vec<ViewLine>>> {
    let mut views: BTreeMap<ViewKey, Vec<ViewLine>> = BTreeMap::new();
    for line in reader.lines() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let record: ExportRecord = serde_json::from_str(&line)?;
        views
            .entry((record.conversation_id.clone(), record.view_owner.clone()))
            .or_default()
            .push(ViewLine::from(&record));
    }
    Ok(views)
}
