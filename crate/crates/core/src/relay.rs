//! Mirrored-room relay: every participant owns a private view of a conversation. A
//! sender's view receives exactly what they typed; every other view receives the
//! output of that recipient's assigned transform, attributed to the sender.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::ids::{ConversationId, ExperimentId, MessageId, ParticipantId};
use crate::model::*;
use crate::platform::Platform;
use crate::store::{self, Entity};
use crate::transform::{apply_transform, TransformSpec};

impl Platform {
    /// Creates a conversation with one room view per participant, each seeded with the
    /// task prompt at seq 1.
    pub fn open_conversation(
        &self,
        experiment: &ExperimentId,
        participants: &[ParticipantId],
        condition: BTreeMap<ParticipantId, TransformSpec>,
    ) -> Result<Conversation> {
        self.store
            .write(|tx| open_conversation_in(tx, experiment, participants, condition, None))
    }

    pub fn submit_message(
        &self,
        token: &str,
        conversation: &ConversationId,
        client_msg_id: &str,
        body: &str,
    ) -> Result<SubmitAck> {
        let sender = self.authenticate(token)?;
        self.submit_as(&sender.id, conversation, client_msg_id, body)
    }

    /// Submits on behalf of an already authenticated participant.
    pub fn submit_as(
        &self,
        sender: &ParticipantId,
        conversation: &ConversationId,
        client_msg_id: &str,
        body: &str,
    ) -> Result<SubmitAck> {
        self.store.write(|tx| {
            let (conv, condition) = store::conversation(tx, conversation)?;
            if !conv.participant_ids.contains(sender) {
                return Err(Error::Forbidden(format!(
                    "{sender} is not a participant of {conversation}"
                )));
            }
            if client_msg_id.is_empty() || client_msg_id.chars().count() > MAX_CLIENT_MSG_ID_CHARS {
                return Err(Error::validation(format!(
                    "client_msg_id must have 1..={MAX_CLIENT_MSG_ID_CHARS} characters"
                )));
            }
            if let Some(original) = store::find_message(tx, conversation, sender, client_msg_id)? {
                let seq = store::seq_of_message(tx, conversation, sender, &original.id)?
                    .ok_or_else(|| Error::Integrity(format!("message {} missing from sender view", original.id)))?;
                let own_event = store::view_events(tx, conversation, sender, seq - 1)?
                    .into_iter()
                    .next()
                    .ok_or_else(|| Error::Integrity("sender view event vanished".into()))?;
                return Ok(SubmitAck {
                    conversation_id: conversation.clone(),
                    message_id: original.id,
                    client_msg_id: client_msg_id.to_owned(),
                    seq,
                    duplicate: true,
                    own_event,
                    deliveries: Vec::new(),
                });
            }
            if conv.state == ConversationState::Closed {
                return Err(Error::Closed(conversation.to_string()));
            }
            let len = body.chars().count();
            if len > MAX_BODY_CHARS {
                return Err(Error::Size {
                    len,
                    max: MAX_BODY_CHARS,
                });
            }

            let message = MessageEvent {
                id: MessageId::generate(),
                conversation_id: conversation.clone(),
                sender: sender.clone(),
                client_msg_id: client_msg_id.to_owned(),
                body: body.to_owned(),
                server_ts: now(),
            };
            let sender_seq = store::next_seq(tx, conversation, sender)?;
            store::record_in(
                tx,
                Entity::Message {
                    message: &message,
                    sender_seq,
                },
            )?;

            let mut recipients = Vec::new();
            for recipient in conv.participant_ids.iter().filter(|p| *p != sender) {
                let spec = condition.get(recipient).ok_or_else(|| {
                    Error::Integrity(format!("no condition for recipient {recipient}"))
                })?;
                let result = apply_transform(spec, body);
                let variant = DeliveredVariant {
                    message_id: message.id.clone(),
                    recipient: recipient.clone(),
                    delivered_body: result.output,
                    transform_trace: result.trace,
                    persona: sender.clone(),
                };
                let seq = store::next_seq(tx, conversation, recipient)?;
                store::record_in(tx, Entity::Delivery { variant: &variant, seq })?;
                recipients.push((recipient.clone(), seq));
            }

            let mut own_event = store::view_events(tx, conversation, sender, sender_seq - 1)?;
            let mut deliveries = Vec::with_capacity(recipients.len());
            for (recipient, seq) in recipients {
                deliveries.extend(store::view_events(tx, conversation, &recipient, seq - 1)?);
            }
            Ok(SubmitAck {
                conversation_id: conversation.clone(),
                message_id: message.id,
                client_msg_id: client_msg_id.to_owned(),
                seq: sender_seq,
                duplicate: false,
                own_event: own_event.remove(0),
                deliveries,
            })
        })
    }

    pub fn fetch_backlog(&self, token: &str, conversation: &ConversationId, since_seq: u64) -> Result<Vec<ViewEvent>> {
        let caller = self.authenticate(token)?;
        self.fetch_backlog_as(&caller.id, conversation, since_seq)
    }

    pub fn fetch_backlog_as(
        &self,
        caller: &ParticipantId,
        conversation: &ConversationId,
        since_seq: u64,
    ) -> Result<Vec<ViewEvent>> {
        self.store.read(|conn| {
            let (conv, _) = store::conversation(conn, conversation)?;
            if !conv.participant_ids.contains(caller) {
                return Err(Error::Forbidden(format!(
                    "{caller} is not a participant of {conversation}"
                )));
            }
            store::view_events(conn, conversation, caller, since_seq)
        })
    }

    /// Closing an already closed conversation is a no-op.
    pub fn close_conversation(&self, conversation: &ConversationId) -> Result<Conversation> {
        self.store.write(|tx| close_in(tx, conversation))
    }

    pub fn conversation(&self, id: &ConversationId) -> Result<(Conversation, BTreeMap<ParticipantId, TransformSpec>)> {
        self.store.read(|conn| store::conversation(conn, id))
    }

    pub fn open_conversations_of(&self, participant: &ParticipantId) -> Result<Vec<ConversationId>> {
        self.store
            .read(|conn| store::open_conversations_of(conn, participant))
    }

    /// Canonical messages of a conversation in commit order; administrative use only.
    pub fn messages(&self, conversation: &ConversationId) -> Result<Vec<MessageEvent>> {
        self.store.read(|conn| {
            store::conversation(conn, conversation)?;
            store::messages(conn, conversation)
        })
    }

    /// All deliveries of a message; administrative use only.
    pub fn deliveries(&self, message: &MessageId) -> Result<Vec<DeliveredVariant>> {
        self.store.read(|conn| store::deliveries(conn, message))
    }
}

pub(crate) fn close_in(tx: &rusqlite::Transaction<'_>, id: &ConversationId) -> Result<Conversation> {
    let (mut conv, condition) = store::conversation(tx, id)?;
    if conv.state == ConversationState::Closed {
        return Ok(conv);
    }
    conv.state = ConversationState::Closed;
    store::set_conversation_state(tx, id, conv.state)?;
    store::log_snapshot(
        tx,
        EntityKind::Conversation,
        id.as_str(),
        &serde_json::json!({ "conversation": &conv, "condition": condition }),
    )?;
    Ok(conv)
}

pub(crate) fn validate_condition(
    participants: &[ParticipantId],
    condition: &BTreeMap<ParticipantId, TransformSpec>,
) -> Result<()> {
    let members: BTreeSet<&ParticipantId> = participants.iter().collect();
    if let Some(missing) = members.iter().find(|p| !condition.contains_key(**p)) {
        return Err(Error::validation(format!("no condition entry for participant {missing}")));
    }
    if let Some(extra) = condition.keys().find(|p| !members.contains(p)) {
        return Err(Error::validation(format!(
            "condition entry for {extra}, who is not in the conversation"
        )));
    }
    for spec in condition.values() {
        spec.validate()?;
    }
    Ok(())
}

pub(crate) fn open_conversation_in(
    tx: &rusqlite::Transaction<'_>,
    experiment: &ExperimentId,
    participants: &[ParticipantId],
    condition: BTreeMap<ParticipantId, TransformSpec>,
    round_index: Option<usize>,
) -> Result<Conversation> {
    let exp = store::experiment(tx, experiment)?;
    if participants.len() < 2 {
        return Err(Error::validation("a conversation needs at least two participants"));
    }
    let unique: BTreeSet<&ParticipantId> = participants.iter().collect();
    if unique.len() != participants.len() {
        return Err(Error::validation("duplicate participant in conversation"));
    }
    for id in participants {
        let p = store::participant(tx, id)?;
        if p.experiment_id != exp.id {
            return Err(Error::validation(format!("{id} is registered to another experiment")));
        }
    }
    validate_condition(participants, &condition)?;

    let conversation = Conversation {
        id: ConversationId::generate(),
        experiment_id: exp.id.clone(),
        round_index,
        participant_ids: participants.to_vec(),
        state: ConversationState::Open,
        created_at: now(),
    };
    store::record_in(
        tx,
        Entity::Conversation {
            conversation: &conversation,
            condition: &condition,
        },
    )?;
    for owner in participants {
        let prompt = ViewEvent {
            conversation_id: conversation.id.clone(),
            owner: owner.clone(),
            seq: 1,
            kind: ViewEventKind::System,
            message_id: None,
            author: None,
            author_name: None,
            body: exp.task.prompt_text.clone(),
            server_ts: conversation.created_at,
        };
        store::record_in(tx, Entity::System(&prompt))?;
    }
    Ok(conversation)
}
