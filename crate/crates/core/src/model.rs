//! Entities shared by the relay, the experiment manager and the store.

use std::collections::BTreeMap;

use chrono::{DateTime, SecondsFormat, SubsecRound, Utc};
use serde::{Deserialize, Serialize};

use crate::ids::{ConversationId, ExperimentId, MessageId, ParticipantId};
use crate::transform::{TraceRecord, TransformSpec};

/// Upper bound on a message body, in code points.
pub const MAX_BODY_CHARS: usize = 4096;
pub const MAX_CLIENT_MSG_ID_CHARS: usize = 128;

/// Current time at millisecond precision, so that stored timestamps round-trip exactly.
pub fn now() -> DateTime<Utc> {
    Utc::now().trunc_subsecs(3)
}

pub fn format_ts(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Millis, true)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskConfig {
    pub prompt_text: String,
    #[serde(default)]
    pub terms: Vec<String>,
}

/// Which member(s) of a scheduled pair receive the manipulated text.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionTarget {
    First,
    #[default]
    Second,
    Both,
}

/// A manipulation handed out to scheduled conversations in rotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionTemplate {
    #[serde(default)]
    pub target: ConditionTarget,
    pub transform: TransformSpec,
}

impl ConditionTemplate {
    pub fn per_recipient(
        &self,
        first: &ParticipantId,
        second: &ParticipantId,
    ) -> BTreeMap<ParticipantId, TransformSpec> {
        let (a, b) = match self.target {
            ConditionTarget::First => (self.transform.clone(), TransformSpec::identity()),
            ConditionTarget::Second => (TransformSpec::identity(), self.transform.clone()),
            ConditionTarget::Both => (self.transform.clone(), self.transform.clone()),
        };
        BTreeMap::from([(first.clone(), a), (second.clone(), b)])
    }
}

/// Everything needed to create an experiment, with transforms fully resolved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub rounds: usize,
    pub task: TaskConfig,
    #[serde(default)]
    pub conditions: Vec<ConditionTemplate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Experiment {
    pub id: ExperimentId,
    pub name: String,
    pub task: TaskConfig,
    pub rounds: usize,
    pub conditions: Vec<ConditionTemplate>,
    pub rounds_started: usize,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participant {
    pub id: ParticipantId,
    pub experiment_id: ExperimentId,
    pub display_name: String,
    pub created_at: DateTime<Utc>,
}

/// Returned once by registration; the token is not retrievable afterwards.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Registration {
    pub participant: Participant,
    pub token: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionAssignment {
    pub conversation_id: ConversationId,
    pub per_recipient: BTreeMap<ParticipantId, TransformSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConversationState {
    Open,
    Closed,
}

impl ConversationState {
    pub(crate) fn as_str(self) -> &'static str {
        match self {
            ConversationState::Open => "open",
            ConversationState::Closed => "closed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conversation {
    pub id: ConversationId,
    pub experiment_id: ExperimentId,
    pub round_index: Option<usize>,
    pub participant_ids: Vec<ParticipantId>,
    pub state: ConversationState,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageEvent {
    pub id: MessageId,
    pub conversation_id: ConversationId,
    pub sender: ParticipantId,
    pub client_msg_id: String,
    pub body: String,
    pub server_ts: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliveredVariant {
    pub message_id: MessageId,
    pub recipient: ParticipantId,
    pub delivered_body: String,
    pub transform_trace: TraceRecord,
    /// Displayed author; always the original sender.
    pub persona: ParticipantId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewEventKind {
    System,
    Message,
}

/// One entry of a participant's private room view.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewEvent {
    pub conversation_id: ConversationId,
    pub owner: ParticipantId,
    pub seq: u64,
    pub kind: ViewEventKind,
    pub message_id: Option<MessageId>,
    pub author: Option<ParticipantId>,
    pub author_name: Option<String>,
    pub body: String,
    pub server_ts: DateTime<Utc>,
}

/// Result of a submit: the sender's ack plus the events appended to other views.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmitAck {
    pub conversation_id: ConversationId,
    pub message_id: MessageId,
    pub client_msg_id: String,
    pub seq: u64,
    pub duplicate: bool,
    /// The sender's own view event.
    pub own_event: ViewEvent,
    /// Empty for duplicates.
    pub deliveries: Vec<ViewEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Experiment,
    Participant,
    Conversation,
    Message,
    Delivery,
    System,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Experiment => "experiment",
            EntityKind::Participant => "participant",
            EntityKind::Conversation => "conversation",
            EntityKind::Message => "message",
            EntityKind::Delivery => "delivery",
            EntityKind::System => "system",
        }
    }

    pub(crate) fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "experiment" => EntityKind::Experiment,
            "participant" => EntityKind::Participant,
            "conversation" => EntityKind::Conversation,
            "message" => EntityKind::Message,
            "delivery" => EntityKind::Delivery,
            "system" => EntityKind::System,
            _ => return None,
        })
    }
}

/// A row of the append-only event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredEvent {
    pub id: i64,
    pub kind: EntityKind,
    pub entity_id: String,
    pub payload: serde_json::Value,
    pub recorded_at: DateTime<Utc>,
}
