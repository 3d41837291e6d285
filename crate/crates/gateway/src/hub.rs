//! Registry of live participant connections.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use relaylab_core::{ParticipantId, ViewEvent};
use tokio::sync::mpsc::UnboundedSender;

use crate::protocol::ServerFrame;

/// What the writer half of a connection is asked to do.
#[derive(Debug, Clone)]
pub enum Outbound {
    Frame(ServerFrame),
    Ping,
    Close,
}

pub type ConnectionId = u64;

type Connections = HashMap<ParticipantId, Vec<(ConnectionId, UnboundedSender<Outbound>)>>;

#[derive(Default)]
pub struct Hub {
    next_id: AtomicU64,
    connections: Mutex<Connections>,
}

impl Hub {
    pub fn register(&self, participant: &ParticipantId, sender: UnboundedSender<Outbound>) -> ConnectionId {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        self.lock().entry(participant.clone()).or_default().push((id, sender));
        id
    }

    pub fn unregister(&self, participant: &ParticipantId, connection: ConnectionId) {
        let mut map = self.lock();
        if let Some(list) = map.get_mut(participant) {
            list.retain(|(id, _)| *id != connection);
            if list.is_empty() {
                map.remove(participant);
            }
        }
    }

    pub fn connection_count(&self, participant: &ParticipantId) -> usize {
        self.lock().get(participant).map_or(0, Vec::len)
    }

    /// Sends `event` to every connection of its view owner except `skip`.
    pub fn push(&self, event: &ViewEvent, skip: Option<ConnectionId>) {
        let map = self.lock();
        let Some(list) = map.get(&event.owner) else {
            return;
        };
        let frame = ServerFrame::event(event);
        for (id, sender) in list {
            if Some(*id) != skip {
                // A closed receiver just means the socket is going away.
                let _ = sender.send(Outbound::Frame(frame.clone()));
            }
        }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Connections> {
        self.connections.lock().unwrap_or_else(|e| e.into_inner())
    }
}
