//! Single-file relational store with an append-only event log.
//!
//! Every write goes through one SQLite transaction that both updates the relational
//! tables and appends a full snapshot to `event_log`; a commit is durable
//! (`synchronous=FULL`) before any caller sees its result.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Mutex, MutexGuard};

use chrono::{DateTime, Utc};
use rusqlite::{params, Connection, ErrorCode, OptionalExtension, Row, Transaction};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ids::{ConversationId, ExperimentId, MessageId, ParticipantId};
use crate::model::*;
use crate::schedule::PairingSchedule;
use crate::transform::TransformSpec;

const SCHEMA: &str = r#"
CREATE TABLE IF NOT EXISTS event_log (
    id          INTEGER PRIMARY KEY AUTOINCREMENT,
    kind        TEXT NOT NULL,
    entity_id   TEXT NOT NULL,
    payload     TEXT NOT NULL,
    recorded_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS experiments (
    id             TEXT PRIMARY KEY,
    name           TEXT NOT NULL UNIQUE,
    task           TEXT NOT NULL,
    rounds         INTEGER NOT NULL CHECK (rounds >= 1),
    conditions     TEXT NOT NULL,
    rounds_started INTEGER NOT NULL DEFAULT 0,
    schedule       TEXT,
    created_at     TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS participants (
    id            TEXT PRIMARY KEY,
    experiment_id TEXT NOT NULL REFERENCES experiments(id),
    ordinal       INTEGER NOT NULL,
    display_name  TEXT NOT NULL,
    token_hash    TEXT NOT NULL UNIQUE,
    created_at    TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS conversations (
    id            TEXT PRIMARY KEY,
    experiment_id TEXT NOT NULL REFERENCES experiments(id),
    ordinal       INTEGER NOT NULL,
    round_index   INTEGER,
    participants  TEXT NOT NULL,
    state         TEXT NOT NULL,
    condition     TEXT NOT NULL,
    created_at    TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS conversation_members (
    conversation_id TEXT NOT NULL REFERENCES conversations(id),
    participant_id  TEXT NOT NULL REFERENCES participants(id),
    PRIMARY KEY (conversation_id, participant_id)
);
CREATE TABLE IF NOT EXISTS messages (
    id              TEXT PRIMARY KEY,
    conversation_id TEXT NOT NULL REFERENCES conversations(id),
    sender          TEXT NOT NULL REFERENCES participants(id),
    client_msg_id   TEXT NOT NULL,
    body            TEXT NOT NULL,
    server_ts       TEXT NOT NULL,
    UNIQUE (conversation_id, sender, client_msg_id)
);
CREATE TABLE IF NOT EXISTS deliveries (
    message_id     TEXT NOT NULL REFERENCES messages(id),
    recipient      TEXT NOT NULL REFERENCES participants(id),
    delivered_body TEXT NOT NULL,
    trace          TEXT NOT NULL,
    persona        TEXT NOT NULL REFERENCES participants(id),
    PRIMARY KEY (message_id, recipient)
);
CREATE TABLE IF NOT EXISTS view_events (
    conversation_id TEXT NOT NULL REFERENCES conversations(id),
    owner           TEXT NOT NULL REFERENCES participants(id),
    seq             INTEGER NOT NULL,
    kind            TEXT NOT NULL,
    message_id      TEXT REFERENCES messages(id),
    author          TEXT REFERENCES participants(id),
    body            TEXT NOT NULL,
    server_ts       TEXT NOT NULL,
    PRIMARY KEY (conversation_id, owner, seq)
);
CREATE INDEX IF NOT EXISTS view_events_message ON view_events(message_id);
CREATE TRIGGER IF NOT EXISTS messages_immutable BEFORE UPDATE ON messages
BEGIN
    SELECT RAISE(ABORT, 'messages are immutable');
END;
CREATE TRIGGER IF NOT EXISTS event_log_no_update BEFORE UPDATE ON event_log
BEGIN
    SELECT RAISE(ABORT, 'event log is append-only');
END;
CREATE TRIGGER IF NOT EXISTS event_log_no_delete BEFORE DELETE ON event_log
BEGIN
    SELECT RAISE(ABORT, 'event log is append-only');
END;
"#;

/// Something that can be appended to the store.
#[derive(Debug, Clone, Copy)]
pub enum Entity<'a> {
    Experiment(&'a Experiment),
    Participant {
        participant: &'a Participant,
        token_hash: &'a str,
    },
    Conversation {
        conversation: &'a Conversation,
        condition: &'a BTreeMap<ParticipantId, TransformSpec>,
    },
    /// A canonical message together with its entry in the sender's own view.
    Message {
        message: &'a MessageEvent,
        sender_seq: u64,
    },
    /// A delivered variant together with its entry in the recipient's view.
    Delivery {
        variant: &'a DeliveredVariant,
        seq: u64,
    },
    System(&'a ViewEvent),
}

pub struct Store {
    conn: Mutex<Connection>,
}

impl Store {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let conn = Connection::open(path)?;
        conn.pragma_update(None, "journal_mode", "WAL")?;
        Self::init(conn)
    }

    pub fn open_in_memory() -> Result<Self> {
        Self::init(Connection::open_in_memory()?)
    }

    fn init(conn: Connection) -> Result<Self> {
        conn.pragma_update(None, "synchronous", "FULL")?;
        conn.pragma_update(None, "foreign_keys", "ON")?;
        conn.execute_batch(SCHEMA)?;
        Ok(Self {
            conn: Mutex::new(conn),
        })
    }

    fn lock(&self) -> MutexGuard<'_, Connection> {
        self.conn.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    /// Runs `f` in a transaction; commits only if it returns `Ok`.
    pub(crate) fn write<T>(&self, f: impl FnOnce(&Transaction<'_>) -> Result<T>) -> Result<T> {
        let mut conn = self.lock();
        let tx = conn.transaction()?;
        let value = f(&tx)?;
        tx.commit()?;
        Ok(value)
    }

    pub(crate) fn read<T>(&self, f: impl FnOnce(&Connection) -> Result<T>) -> Result<T> {
        let conn = self.lock();
        f(&conn)
    }

    /// Appends `entity` in its own transaction and returns its event-log id.
    pub fn record(&self, entity: Entity<'_>) -> Result<i64> {
        self.write(|tx| record_in(tx, entity))
    }

    pub fn event_log(&self, after_id: i64, limit: usize) -> Result<Vec<StoredEvent>> {
        self.read(|conn| {
            let mut stmt = conn.prepare(
                "SELECT id, kind, entity_id, payload, recorded_at FROM event_log
                 WHERE id > ?1 ORDER BY id LIMIT ?2",
            )?;
            let rows = stmt.query_map(params![after_id, limit as i64], |row| {
                Ok((
                    row.get::<_, i64>(0)?,
                    row.get::<_, String>(1)?,
                    row.get::<_, String>(2)?,
                    row.get::<_, String>(3)?,
                    row.get::<_, String>(4)?,
                ))
            })?;
            let mut events = Vec::new();
            for row in rows {
                let (id, kind, entity_id, payload, recorded_at) = row?;
                events.push(StoredEvent {
                    id,
                    kind: EntityKind::parse(&kind)
                        .ok_or_else(|| Error::Integrity(format!("unknown event kind {kind}")))?,
                    entity_id,
                    payload: serde_json::from_str(&payload)?,
                    recorded_at: parse_ts(&recorded_at)?,
                });
            }
            Ok(events)
        })
    }

    /// Executes raw SQL against the store, bypassing every invariant. Fault injection only.
    #[doc(hidden)]
    pub fn execute_unchecked(&self, sql: &str) -> Result<usize> {
        Ok(self.lock().execute(sql, [])?)
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string(value)?)
}

pub(crate) fn parse_ts(s: &str) -> Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s)
        .map(|ts| ts.with_timezone(&Utc))
        .map_err(|e| Error::Integrity(format!("bad timestamp {s:?}: {e}")))
}

/// Translates foreign-key and uniqueness violations into domain errors.
fn constraint(err: rusqlite::Error, what: &'static str) -> Error {
    if let rusqlite::Error::SqliteFailure(code, msg) = &err {
        if code.code == ErrorCode::ConstraintViolation {
            return match code.extended_code {
                rusqlite::ffi::SQLITE_CONSTRAINT_FOREIGNKEY => {
                    Error::Integrity(format!("{what} references a missing row"))
                }
                _ => Error::Integrity(format!(
                    "{what}: {}",
                    msg.clone().unwrap_or_else(|| "constraint violated".into())
                )),
            };
        }
    }
    Error::Storage(err)
}

fn log(tx: &Transaction<'_>, kind: EntityKind, entity_id: &str, payload: &impl Serialize) -> Result<i64> {
    tx.execute(
        "INSERT INTO event_log (kind, entity_id, payload, recorded_at) VALUES (?1, ?2, ?3, ?4)",
        params![kind.as_str(), entity_id, to_json(payload)?, format_ts(&now())],
    )?;
    Ok(tx.last_insert_rowid())
}

/// Appends a snapshot after an in-place state change.
pub(crate) fn log_snapshot(
    tx: &Transaction<'_>,
    kind: EntityKind,
    entity_id: &str,
    payload: &impl Serialize,
) -> Result<i64> {
    log(tx, kind, entity_id, payload)
}

fn insert_view_event(tx: &Transaction<'_>, event: &ViewEvent) -> Result<()> {
    let kind = match event.kind {
        ViewEventKind::System => "system",
        ViewEventKind::Message => "message",
    };
    tx.execute(
        "INSERT INTO view_events (conversation_id, owner, seq, kind, message_id, author, body, server_ts)
         VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)",
        params![
            event.conversation_id.as_str(),
            event.owner.as_str(),
            event.seq as i64,
            kind,
            event.message_id.as_ref().map(MessageId::as_str),
            event.author.as_ref().map(ParticipantId::as_str),
            event.body,
            format_ts(&event.server_ts),
        ],
    )
    .map_err(|e| constraint(e, "view event"))?;
    Ok(())
}

pub(crate) fn record_in(tx: &Transaction<'_>, entity: Entity<'_>) -> Result<i64> {
    match entity {
        Entity::Experiment(exp) => {
            tx.execute(
                "INSERT INTO experiments (id, name, task, rounds, conditions, rounds_started, created_at)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)",
                params![
                    exp.id.as_str(),
                    exp.name,
                    to_json(&exp.task)?,
                    exp.rounds as i64,
                    to_json(&exp.conditions)?,
                    exp.rounds_started as i64,
                    format_ts(&exp.created_at),
                ],
            )
            .map_err(|e| match constraint(e, "experiment") {
                Error::Integrity(_) => Error::Duplicate {
                    entity: "experiment",
                    key: exp.name.clone(),
                },
                other => other,
            })?;
            log(tx, EntityKind::Experiment, exp.id.as_str(), exp)
        }
        Entity::Participant {
            participant,
            token_hash,
        } => {
            let ordinal: i64 = tx.query_row(
                "SELECT COUNT(*) FROM participants WHERE experiment_id = ?1",
                [participant.experiment_id.as_str()],
                |r| r.get(0),
            )?;
            tx.execute(
                "INSERT INTO participants (id, experiment_id, ordinal, display_name, token_hash, created_at)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
                params![
                    participant.id.as_str(),
                    participant.experiment_id.as_str(),
                    ordinal,
                    participant.display_name,
                    token_hash,
                    format_ts(&participant.created_at),
                ],
            )
            .map_err(|e| constraint(e, "participant"))?;
            log(tx, EntityKind::Participant, participant.id.as_str(), participant)
        }
        Entity::Conversation {
            conversation,
            condition,
        } => {
            let ordinal: i64 = tx.query_row(
                "SELECT COUNT(*) FROM conversations WHERE experiment_id = ?1",
                [conversation.experiment_id.as_str()],
                |r| r.get(0),
            )?;
            tx.execute(
                "INSERT INTO conversations (id, experiment_id, ordinal, round_index, participants, state, condition, created_at)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)",
                params![
                    conversation.id.as_str(),
                    conversation.experiment_id.as_str(),
                    ordinal,
                    conversation.round_index.map(|r| r as i64),
                    to_json(&conversation.participant_ids)?,
                    conversation.state.as_str(),
                    to_json(condition)?,
                    format_ts(&conversation.created_at),
                ],
            )
            .map_err(|e| constraint(e, "conversation"))?;
            for member in &conversation.participant_ids {
                tx.execute(
                    "INSERT INTO conversation_members (conversation_id, participant_id) VALUES (?1, ?2)",
                    params![conversation.id.as_str(), member.as_str()],
                )
                .map_err(|e| constraint(e, "conversation member"))?;
            }
            log(
                tx,
                EntityKind::Conversation,
                conversation.id.as_str(),
                &serde_json::json!({ "conversation": conversation, "condition": condition }),
            )
        }
        Entity::Message {
            message,
            sender_seq,
        } => {
            tx.execute(
                "INSERT INTO messages (id, conversation_id, sender, client_msg_id, body, server_ts)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
                params![
                    message.id.as_str(),
                    message.conversation_id.as_str(),
                    message.sender.as_str(),
                    message.client_msg_id,
                    message.body,
                    format_ts(&message.server_ts),
                ],
            )
            .map_err(|e| constraint(e, "message"))?;
            insert_view_event(
                tx,
                &ViewEvent {
                    conversation_id: message.conversation_id.clone(),
                    owner: message.sender.clone(),
                    seq: sender_seq,
                    kind: ViewEventKind::Message,
                    message_id: Some(message.id.clone()),
                    author: Some(message.sender.clone()),
                    author_name: None,
                    body: message.body.clone(),
                    server_ts: message.server_ts,
                },
            )?;
            log(
                tx,
                EntityKind::Message,
                message.id.as_str(),
                &serde_json::json!({ "message": message, "sender_seq": sender_seq }),
            )
        }
        Entity::Delivery { variant, seq } => {
            let message: Option<(String, String)> = tx
                .query_row(
                    "SELECT conversation_id, server_ts FROM messages WHERE id = ?1",
                    [variant.message_id.as_str()],
                    |r| Ok((r.get(0)?, r.get(1)?)),
                )
                .optional()?;
            let Some((conversation_id, server_ts)) = message else {
                return Err(Error::Integrity(format!(
                    "delivery references missing message {}",
                    variant.message_id
                )));
            };
            tx.execute(
                "INSERT INTO deliveries (message_id, recipient, delivered_body, trace, persona)
                 VALUES (?1, ?2, ?3, ?4, ?5)",
                params![
                    variant.message_id.as_str(),
                    variant.recipient.as_str(),
                    variant.delivered_body,
                    to_json(&variant.transform_trace)?,
                    variant.persona.as_str(),
                ],
            )
            .map_err(|e| constraint(e, "delivery"))?;
            insert_view_event(
                tx,
                &ViewEvent {
                    conversation_id: ConversationId::from(conversation_id),
                    owner: variant.recipient.clone(),
                    seq,
                    kind: ViewEventKind::Message,
                    message_id: Some(variant.message_id.clone()),
                    author: Some(variant.persona.clone()),
                    author_name: None,
                    body: variant.delivered_body.clone(),
                    server_ts: parse_ts(&server_ts)?,
                },
            )?;
            log(
                tx,
                EntityKind::Delivery,
                &format!("{}/{}", variant.message_id, variant.recipient),
                &serde_json::json!({ "variant": variant, "seq": seq }),
            )
        }
        Entity::System(event) => {
            insert_view_event(tx, event)?;
            log(
                tx,
                EntityKind::System,
                &format!("{}/{}/{}", event.conversation_id, event.owner, event.seq),
                event,
            )
        }
    }
}

// ---- queries -------------------------------------------------------------

fn experiment_from_row(row: &Row<'_>) -> rusqlite::Result<(Experiment, Option<String>)> {
    let parse_err = |i: usize, e: Box<dyn std::error::Error + Send + Sync>| {
        rusqlite::Error::FromSqlConversionFailure(i, rusqlite::types::Type::Text, e)
    };
    let task: String = row.get(2)?;
    let conditions: String = row.get(4)?;
    let created_at: String = row.get(6)?;
    Ok((
        Experiment {
            id: ExperimentId::from(row.get::<_, String>(0)?),
            name: row.get(1)?,
            task: serde_json::from_str(&task).map_err(|e| parse_err(2, e.into()))?,
            rounds: row.get::<_, i64>(3)? as usize,
            conditions: serde_json::from_str(&conditions).map_err(|e| parse_err(4, e.into()))?,
            rounds_started: row.get::<_, i64>(5)? as usize,
            created_at: parse_ts(&created_at).map_err(|e| parse_err(6, e.into()))?,
        },
        row.get(7)?,
    ))
}

const EXPERIMENT_COLUMNS: &str =
    "id, name, task, rounds, conditions, rounds_started, created_at, schedule";

pub(crate) fn experiment(conn: &Connection, id: &ExperimentId) -> Result<Experiment> {
    Ok(experiment_with_schedule(conn, id)?.0)
}

pub(crate) fn experiment_with_schedule(
    conn: &Connection,
    id: &ExperimentId,
) -> Result<(Experiment, Option<PairingSchedule<ParticipantId>>)> {
    let found = conn
        .query_row(
            &format!("SELECT {EXPERIMENT_COLUMNS} FROM experiments WHERE id = ?1"),
            [id.as_str()],
            experiment_from_row,
        )
        .optional()?;
    let (exp, schedule) = found.ok_or_else(|| Error::not_found("experiment", id.as_str()))?;
    let schedule = schedule.map(|s| serde_json::from_str(&s)).transpose()?;
    Ok((exp, schedule))
}

pub(crate) fn experiments(conn: &Connection) -> Result<Vec<Experiment>> {
    let mut stmt = conn.prepare(&format!(
        "SELECT {EXPERIMENT_COLUMNS} FROM experiments ORDER BY created_at, id"
    ))?;
    let rows = stmt.query_map([], experiment_from_row)?;
    Ok(rows.map(|r| r.map(|(e, _)| e)).collect::<rusqlite::Result<_>>()?)
}

fn participant_from_row(row: &Row<'_>) -> rusqlite::Result<Participant> {
    let created_at: String = row.get(3)?;
    Ok(Participant {
        id: ParticipantId::from(row.get::<_, String>(0)?),
        experiment_id: ExperimentId::from(row.get::<_, String>(1)?),
        display_name: row.get(2)?,
        created_at: parse_ts(&created_at).map_err(|e| {
            rusqlite::Error::FromSqlConversionFailure(3, rusqlite::types::Type::Text, e.into())
        })?,
    })
}

const PARTICIPANT_COLUMNS: &str = "id, experiment_id, display_name, created_at";

pub(crate) fn participants(conn: &Connection, exp: &ExperimentId) -> Result<Vec<Participant>> {
    let mut stmt = conn.prepare(&format!(
        "SELECT {PARTICIPANT_COLUMNS} FROM participants WHERE experiment_id = ?1 ORDER BY ordinal"
    ))?;
    let rows = stmt.query_map([exp.as_str()], participant_from_row)?;
    Ok(rows.collect::<rusqlite::Result<_>>()?)
}

pub(crate) fn participant(conn: &Connection, id: &ParticipantId) -> Result<Participant> {
    conn.query_row(
        &format!("SELECT {PARTICIPANT_COLUMNS} FROM participants WHERE id = ?1"),
        [id.as_str()],
        participant_from_row,
    )
    .optional()?
    .ok_or_else(|| Error::not_found("participant", id.as_str()))
}

pub(crate) fn participant_by_token_hash(conn: &Connection, hash: &str) -> Result<Participant> {
    conn.query_row(
        &format!("SELECT {PARTICIPANT_COLUMNS} FROM participants WHERE token_hash = ?1"),
        [hash],
        participant_from_row,
    )
    .optional()?
    .ok_or(Error::Auth)
}

pub(crate) fn display_names(conn: &Connection, exp: &ExperimentId) -> Result<BTreeMap<ParticipantId, String>> {
    Ok(participants(conn, exp)?
        .into_iter()
        .map(|p| (p.id, p.display_name))
        .collect())
}

type ConversationRow = (Conversation, BTreeMap<ParticipantId, TransformSpec>);

fn conversation_from_row(row: &Row<'_>) -> rusqlite::Result<ConversationRow> {
    let conv_err = |i: usize, e: Box<dyn std::error::Error + Send + Sync>| {
        rusqlite::Error::FromSqlConversionFailure(i, rusqlite::types::Type::Text, e)
    };
    let participants: String = row.get(3)?;
    let state: String = row.get(4)?;
    let condition: String = row.get(5)?;
    let created_at: String = row.get(6)?;
    Ok((
        Conversation {
            id: ConversationId::from(row.get::<_, String>(0)?),
            experiment_id: ExperimentId::from(row.get::<_, String>(1)?),
            round_index: row.get::<_, Option<i64>>(2)?.map(|r| r as usize),
            participant_ids: serde_json::from_str(&participants).map_err(|e| conv_err(3, e.into()))?,
            state: if state == "closed" {
                ConversationState::Closed
            } else {
                ConversationState::Open
            },
            created_at: parse_ts(&created_at).map_err(|e| conv_err(6, e.into()))?,
        },
        serde_json::from_str(&condition).map_err(|e| conv_err(5, e.into()))?,
    ))
}

const CONVERSATION_COLUMNS: &str =
    "id, experiment_id, round_index, participants, state, condition, created_at";

pub(crate) fn conversation(conn: &Connection, id: &ConversationId) -> Result<ConversationRow> {
    conn.query_row(
        &format!("SELECT {CONVERSATION_COLUMNS} FROM conversations WHERE id = ?1"),
        [id.as_str()],
        conversation_from_row,
    )
    .optional()?
    .ok_or_else(|| Error::not_found("conversation", id.as_str()))
}

pub(crate) fn conversations(conn: &Connection, exp: &ExperimentId) -> Result<Vec<ConversationRow>> {
    let mut stmt = conn.prepare(&format!(
        "SELECT {CONVERSATION_COLUMNS} FROM conversations WHERE experiment_id = ?1 ORDER BY ordinal"
    ))?;
    let rows = stmt.query_map([exp.as_str()], conversation_from_row)?;
    Ok(rows.collect::<rusqlite::Result<_>>()?)
}

pub(crate) fn open_conversations_of(conn: &Connection, participant: &ParticipantId) -> Result<Vec<ConversationId>> {
    let mut stmt = conn.prepare(
        "SELECT c.id FROM conversations c
         JOIN conversation_members m ON m.conversation_id = c.id
         WHERE m.participant_id = ?1 AND c.state = 'open'
         ORDER BY c.ordinal",
    )?;
    let rows = stmt.query_map([participant.as_str()], |r| r.get::<_, String>(0))?;
    Ok(rows
        .map(|r| r.map(ConversationId::from))
        .collect::<rusqlite::Result<_>>()?)
}

pub(crate) fn set_condition(
    tx: &Transaction<'_>,
    id: &ConversationId,
    condition: &BTreeMap<ParticipantId, TransformSpec>,
) -> Result<()> {
    tx.execute(
        "UPDATE conversations SET condition = ?2 WHERE id = ?1",
        params![id.as_str(), to_json(condition)?],
    )?;
    Ok(())
}

pub(crate) fn set_conversation_state(tx: &Transaction<'_>, id: &ConversationId, state: ConversationState) -> Result<()> {
    tx.execute(
        "UPDATE conversations SET state = ?2 WHERE id = ?1",
        params![id.as_str(), state.as_str()],
    )?;
    Ok(())
}

pub(crate) fn set_schedule(
    tx: &Transaction<'_>,
    id: &ExperimentId,
    schedule: &PairingSchedule<ParticipantId>,
) -> Result<()> {
    tx.execute(
        "UPDATE experiments SET schedule = ?2 WHERE id = ?1",
        params![id.as_str(), to_json(schedule)?],
    )?;
    Ok(())
}

pub(crate) fn set_rounds_started(tx: &Transaction<'_>, id: &ExperimentId, rounds_started: usize) -> Result<()> {
    tx.execute(
        "UPDATE experiments SET rounds_started = ?2 WHERE id = ?1",
        params![id.as_str(), rounds_started as i64],
    )?;
    Ok(())
}

pub(crate) fn message_count(conn: &Connection, conv: &ConversationId) -> Result<u64> {
    let n: i64 = conn.query_row(
        "SELECT COUNT(*) FROM messages WHERE conversation_id = ?1",
        [conv.as_str()],
        |r| r.get(0),
    )?;
    Ok(n as u64)
}

fn message_from_row(row: &Row<'_>) -> rusqlite::Result<MessageEvent> {
    let server_ts: String = row.get(5)?;
    Ok(MessageEvent {
        id: MessageId::from(row.get::<_, String>(0)?),
        conversation_id: ConversationId::from(row.get::<_, String>(1)?),
        sender: ParticipantId::from(row.get::<_, String>(2)?),
        client_msg_id: row.get(3)?,
        body: row.get(4)?,
        server_ts: parse_ts(&server_ts).map_err(|e| {
            rusqlite::Error::FromSqlConversionFailure(5, rusqlite::types::Type::Text, e.into())
        })?,
    })
}

const MESSAGE_COLUMNS: &str = "id, conversation_id, sender, client_msg_id, body, server_ts";

pub(crate) fn find_message(
    conn: &Connection,
    conv: &ConversationId,
    sender: &ParticipantId,
    client_msg_id: &str,
) -> Result<Option<MessageEvent>> {
    Ok(conn
        .query_row(
            &format!(
                "SELECT {MESSAGE_COLUMNS} FROM messages
                 WHERE conversation_id = ?1 AND sender = ?2 AND client_msg_id = ?3"
            ),
            params![conv.as_str(), sender.as_str(), client_msg_id],
            message_from_row,
        )
        .optional()?)
}

/// Messages of a conversation in commit order.
pub(crate) fn messages(conn: &Connection, conv: &ConversationId) -> Result<Vec<MessageEvent>> {
    let mut stmt = conn.prepare(&format!(
        "SELECT {MESSAGE_COLUMNS} FROM messages WHERE conversation_id = ?1 ORDER BY rowid"
    ))?;
    let rows = stmt.query_map([conv.as_str()], message_from_row)?;
    Ok(rows.collect::<rusqlite::Result<_>>()?)
}

pub(crate) fn deliveries(conn: &Connection, message: &MessageId) -> Result<Vec<DeliveredVariant>> {
    let mut stmt = conn.prepare(
        "SELECT message_id, recipient, delivered_body, trace, persona FROM deliveries
         WHERE message_id = ?1 ORDER BY recipient",
    )?;
    let rows = stmt.query_map([message.as_str()], |row| {
        Ok((
            row.get::<_, String>(0)?,
            row.get::<_, String>(1)?,
            row.get::<_, String>(2)?,
            row.get::<_, String>(3)?,
            row.get::<_, String>(4)?,
        ))
    })?;
    let mut out = Vec::new();
    for row in rows {
        let (message_id, recipient, delivered_body, trace, persona) = row?;
        out.push(DeliveredVariant {
            message_id: message_id.into(),
            recipient: recipient.into(),
            delivered_body,
            transform_trace: serde_json::from_str(&trace)?,
            persona: persona.into(),
        });
    }
    Ok(out)
}

pub(crate) fn next_seq(conn: &Connection, conv: &ConversationId, owner: &ParticipantId) -> Result<u64> {
    let max: Option<i64> = conn.query_row(
        "SELECT MAX(seq) FROM view_events WHERE conversation_id = ?1 AND owner = ?2",
        params![conv.as_str(), owner.as_str()],
        |r| r.get(0),
    )?;
    Ok(max.unwrap_or(0) as u64 + 1)
}

pub(crate) fn seq_of_message(
    conn: &Connection,
    conv: &ConversationId,
    owner: &ParticipantId,
    message: &MessageId,
) -> Result<Option<u64>> {
    Ok(conn
        .query_row(
            "SELECT seq FROM view_events WHERE conversation_id = ?1 AND owner = ?2 AND message_id = ?3",
            params![conv.as_str(), owner.as_str(), message.as_str()],
            |r| r.get::<_, i64>(0),
        )
        .optional()?
        .map(|s| s as u64))
}

/// Events of one room view with `seq > since`, in seq order, with author names resolved.
pub(crate) fn view_events(
    conn: &Connection,
    conv: &ConversationId,
    owner: &ParticipantId,
    since: u64,
) -> Result<Vec<ViewEvent>> {
    let mut stmt = conn.prepare(
        "SELECT v.conversation_id, v.owner, v.seq, v.kind, v.message_id, v.author, p.display_name, v.body, v.server_ts
         FROM view_events v LEFT JOIN participants p ON p.id = v.author
         WHERE v.conversation_id = ?1 AND v.owner = ?2 AND v.seq > ?3
         ORDER BY v.seq",
    )?;
    let rows = stmt.query_map(params![conv.as_str(), owner.as_str(), since as i64], view_tuple)?;
    collect_views(rows)
}

/// Every view event of a conversation, ordered by (owner, seq).
pub(crate) fn conversation_view_events(conn: &Connection, conv: &ConversationId) -> Result<Vec<ViewEvent>> {
    let mut stmt = conn.prepare(
        "SELECT v.conversation_id, v.owner, v.seq, v.kind, v.message_id, v.author, p.display_name, v.body, v.server_ts
         FROM view_events v LEFT JOIN participants p ON p.id = v.author
         WHERE v.conversation_id = ?1
         ORDER BY v.owner, v.seq",
    )?;
    let rows = stmt.query_map([conv.as_str()], view_tuple)?;
    collect_views(rows)
}

type ViewTuple = (
    String,
    String,
    i64,
    String,
    Option<String>,
    Option<String>,
    Option<String>,
    String,
    String,
);

fn view_tuple(row: &Row<'_>) -> rusqlite::Result<ViewTuple> {
    Ok((
        row.get(0)?,
        row.get(1)?,
        row.get(2)?,
        row.get(3)?,
        row.get(4)?,
        row.get(5)?,
        row.get(6)?,
        row.get(7)?,
        row.get(8)?,
    ))
}

fn collect_views(rows: impl Iterator<Item = rusqlite::Result<ViewTuple>>) -> Result<Vec<ViewEvent>> {
    let mut out = Vec::new();
    for row in rows {
        let (conv, owner, seq, kind, message_id, author, author_name, body, ts) = row?;
        out.push(ViewEvent {
            conversation_id: conv.into(),
            owner: owner.into(),
            seq: seq as u64,
            kind: if kind == "system" {
                ViewEventKind::System
            } else {
                ViewEventKind::Message
            },
            message_id: message_id.map(MessageId::from),
            author: author.map(ParticipantId::from),
            author_name,
            body,
            server_ts: parse_ts(&ts)?,
        });
    }
    Ok(out)
}
