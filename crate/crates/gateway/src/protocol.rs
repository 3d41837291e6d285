//! JSON text frames of the participant channel.

use relaylab_core::{ConversationId, ParticipantId, ViewEvent, ViewEventKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientFrame {
    Auth {
        token: String,
    },
    Send {
        conversation_id: ConversationId,
        client_msg_id: String,
        body: String,
    },
    Fetch {
        conversation_id: ConversationId,
        #[serde(default)]
        since_seq: u64,
    },
    Ping,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Author {
    pub participant_id: ParticipantId,
    pub display_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerFrame {
    AuthOk {
        participant_id: ParticipantId,
        display_name: String,
        open_conversations: Vec<ConversationId>,
    },
    Event {
        conversation_id: ConversationId,
        seq: u64,
        system: bool,
        /// `null` for system events.
        author: Option<Author>,
        body: String,
        server_ts: String,
    },
    Ack {
        conversation_id: ConversationId,
        client_msg_id: String,
        seq: u64,
        duplicate: bool,
    },
    Error {
        code: String,
        message: String,
    },
    Pong,
}

impl ServerFrame {
    pub fn error(code: impl Into<String>, message: impl Into<String>) -> Self {
        ServerFrame::Error {
            code: code.into(),
            message: message.into(),
        }
    }

    pub fn event(event: &ViewEvent) -> Self {
        ServerFrame::Event {
            conversation_id: event.conversation_id.clone(),
            seq: event.seq,
            system: event.kind == ViewEventKind::System,
            author: event.author.as_ref().map(|id| Author {
                participant_id: id.clone(),
                display_name: event.author_name.clone().unwrap_or_default(),
            }),
            body: event.body.clone(),
            server_ts: relaylab_core::model::format_ts(&event.server_ts),
        }
    }
}
