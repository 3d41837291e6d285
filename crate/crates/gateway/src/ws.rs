use std::time::Instant;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use futures::{SinkExt, StreamExt};
use relaylab_core::{Error, ParticipantId};
use tokio::sync::mpsc;

use crate::hub::{ConnectionId, Outbound};
use crate::protocol::{ClientFrame, ServerFrame};
use crate::AppState;

pub async fn upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| session(socket, state))
}

struct Session {
    participant: ParticipantId,
    connection: ConnectionId,
}

async fn session(socket: WebSocket, state: AppState) {
    let (mut sink, mut stream) = socket.split();
    let (tx, mut rx) = mpsc::unbounded_channel::<Outbound>();
    let writer = tokio::spawn(async move {
        while let Some(out) = rx.recv().await {
            let message = match out {
                Outbound::Frame(frame) => match serde_json::to_string(&frame) {
                    Ok(text) => Message::Text(text.into()),
                    Err(_) => continue,
                },
                Outbound::Ping => Message::Ping(Vec::new().into()),
                Outbound::Close => {
                    let _ = sink.send(Message::Close(None)).await;
                    break;
                }
            };
            if sink.send(message).await.is_err() {
                break;
            }
        }
    });

    let interval = state.heartbeat;
    let mut ticker = tokio::time::interval_at(tokio::time::Instant::now() + interval, interval);
    let mut last_seen = Instant::now();
    let mut session: Option<Session> = None;

    loop {
        tokio::select! {
            incoming = stream.next() => {
                let Some(Ok(message)) = incoming else { break };
                last_seen = Instant::now();
                let text = match message {
                    Message::Text(text) => text,
                    Message::Close(_) => break,
                    _ => continue,
                };
                match serde_json::from_str::<ClientFrame>(&text) {
                    Ok(frame) => {
                        if !handle(frame, &state, &tx, &mut session).await {
                            break;
                        }
                    }
                    Err(e) => {
                        let _ = tx.send(Outbound::Frame(ServerFrame::error("BAD_FRAME", e.to_string())));
                    }
                }
            }
            _ = ticker.tick() => {
                if last_seen.elapsed() > interval * 2 {
                    tracing::debug!("dropping connection after missed heartbeats");
                    let _ = tx.send(Outbound::Close);
                    break;
                }
                let _ = tx.send(Outbound::Ping);
            }
        }
    }

    if let Some(s) = &session {
        state.hub.unregister(&s.participant, s.connection);
    }
    drop(tx);
    let _ = writer.await;
}

/// Returns `false` when the connection must be closed.
async fn handle(
    frame: ClientFrame,
    state: &AppState,
    tx: &mpsc::UnboundedSender<Outbound>,
    session: &mut Option<Session>,
) -> bool {
    let reply = |frame: ServerFrame| {
        let _ = tx.send(Outbound::Frame(frame));
    };
    match frame {
        ClientFrame::Ping => reply(ServerFrame::Pong),
        ClientFrame::Auth { token } => {
            if session.is_some() {
                reply(ServerFrame::error("SEQUENCE", "already authenticated"));
                return true;
            }
            let platform = state.platform.clone();
            let result = blocking(move || {
                let participant = platform.authenticate(&token)?;
                let open = platform.open_conversations_of(&participant.id)?;
                Ok((participant, open))
            })
            .await;
            match result {
                Ok((participant, open_conversations)) => {
                    let connection = state.hub.register(&participant.id, tx.clone());
                    reply(ServerFrame::AuthOk {
                        participant_id: participant.id.clone(),
                        display_name: participant.display_name,
                        open_conversations,
                    });
                    *session = Some(Session {
                        participant: participant.id,
                        connection,
                    });
                }
                Err(e) => {
                    reply(error_frame(&e));
                    let _ = tx.send(Outbound::Close);
                    return false;
                }
            }
        }
        ClientFrame::Send {
            conversation_id,
            client_msg_id,
            body,
        } => {
            let Some(s) = session.as_ref() else {
                reply(ServerFrame::error("SEQUENCE", "authenticate first"));
                return true;
            };
            let (platform, hub, dispatch) = (state.platform.clone(), state.hub.clone(), state.dispatch.clone());
            let (sender, connection) = (s.participant.clone(), s.connection);
            let tx = tx.clone();
            // Commit and fan-out happen under one lock so every socket sees its view in seq order.
            let result = blocking(move || {
                let _guard = dispatch.lock().unwrap_or_else(|e| e.into_inner());
                let ack = platform.submit_as(&sender, &conversation_id, &client_msg_id, &body)?;
                if !ack.duplicate {
                    for event in &ack.deliveries {
                        hub.push(event, None);
                    }
                    hub.push(&ack.own_event, Some(connection));
                }
                let _ = tx.send(Outbound::Frame(ServerFrame::Ack {
                    conversation_id: ack.conversation_id,
                    client_msg_id: ack.client_msg_id,
                    seq: ack.seq,
                    duplicate: ack.duplicate,
                }));
                Ok(())
            })
            .await;
            if let Err(e) = result {
                reply(error_frame(&e));
            }
        }
        ClientFrame::Fetch {
            conversation_id,
            since_seq,
        } => {
            let Some(s) = session.as_ref() else {
                reply(ServerFrame::error("SEQUENCE", "authenticate first"));
                return true;
            };
            let platform = state.platform.clone();
            let owner = s.participant.clone();
            match blocking(move || platform.fetch_backlog_as(&owner, &conversation_id, since_seq)).await {
                Ok(events) => events.iter().for_each(|e| reply(ServerFrame::event(e))),
                Err(e) => reply(error_frame(&e)),
            }
        }
    }
    true
}

fn error_frame(error: &Error) -> ServerFrame {
    ServerFrame::error(error.code(), error.to_string())
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> relaylab_core::Result<T> + Send + 'static) -> relaylab_core::Result<T> {
    tokio::task::spawn_blocking(f)
        .await
        .unwrap_or_else(|e| Err(Error::Io(std::io::Error::other(e))))
}
