//! Scripted agents speaking over the real participant channel, followed by a
//! transcript check against the export.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use relaylab_core::{
    apply_transform, ConversationId, ConversationSummary, ExportRecord, ParticipantId,
};
use relaylab_gateway::{ClientFrame, ServerFrame};
use serde::Serialize;
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

use crate::api::AdminClient;
use crate::error::{CliError, CliResult};
use crate::script::{check_group, AgentScript, ScriptFile};
use crate::tokens::TokensFile;

type Socket = WebSocketStream<MaybeTlsStream<TcpStream>>;

struct Connected {
    script: AgentScript,
    socket: Socket,
    participant: ParticipantId,
    display_name: String,
    conversation: ConversationId,
}

/// One acknowledged utterance.
#[derive(Debug, Clone)]
pub struct Sent {
    pub conversation: ConversationId,
    pub sender: ParticipantId,
    pub seq: u64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranscriptLine {
    pub seq: u64,
    pub author: String,
    pub body: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConversationReport {
    pub conversation_id: ConversationId,
    pub members: Vec<String>,
    pub messages: usize,
    /// Deliveries whose body differs from the original.
    pub altered_deliveries: usize,
    /// Transcript per view owner label.
    pub views: BTreeMap<String, Vec<TranscriptLine>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub conversation_id: ConversationId,
    pub view: String,
    pub seq: u64,
    pub what: String,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub conversations: Vec<ConversationReport>,
    pub mismatches: Vec<Mismatch>,
    pub integrity_violations: usize,
}

impl SimulationReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty() && self.integrity_violations == 0
    }
}

pub async fn simulate(
    client: &AdminClient,
    tokens: &TokensFile,
    script: &ScriptFile,
    timeout: Duration,
) -> CliResult<SimulationReport> {
    script.check_labels(tokens)?;

    let summaries = client.conversations(&tokens.experiment_id).await?;
    let connections = futures::future::try_join_all(
        script
            .agents
            .iter()
            .map(|agent| connect(client.ws_url(), agent.clone(), tokens)),
    )
    .await?;

    let mut groups: BTreeMap<ConversationId, Vec<Connected>> = BTreeMap::new();
    for c in connections {
        groups.entry(c.conversation.clone()).or_default().push(c);
    }
    for (conversation, members) in &groups {
        let summary = summaries
            .iter()
            .find(|s| &s.conversation.id == conversation)
            .ok_or_else(|| CliError::Invalid(format!("{conversation} is not part of this experiment")))?;
        let scripted: BTreeSet<&ParticipantId> = members.iter().map(|m| &m.participant).collect();
        if let Some(missing) = summary.conversation.participant_ids.iter().find(|p| !scripted.contains(p)) {
            return Err(CliError::Invalid(format!(
                "{conversation}: no script for member {}",
                tokens.label_of(missing).unwrap_or(missing.as_str())
            )));
        }
        let scripts: Vec<&AgentScript> = members.iter().map(|m| &m.script).collect();
        check_group(&scripts).map_err(|e| CliError::Invalid(format!("{conversation}: {e}")))?;
    }

    let mut names = BTreeMap::new();
    let mut tasks = Vec::new();
    for members in groups.into_values() {
        let total: usize = members.iter().map(|m| m.script.utterances.len()).sum();
        for member in members {
            names.insert(member.participant.clone(), member.display_name.clone());
            let expected_peer = total - member.script.utterances.len();
            tasks.push(tokio::spawn(run_agent(member, expected_peer)));
        }
    }
    let joined = tokio::time::timeout(timeout, futures::future::join_all(tasks))
        .await
        .map_err(|_| CliError::Check(format!("simulation did not finish within {timeout:?}")))?;
    let mut sent = Vec::new();
    for result in joined {
        sent.extend(result.map_err(|e| CliError::Transport(e.to_string()))??);
    }

    let export = client.export(&tokens.experiment_id, false).await?;
    let records = parse_export(&export)?;
    let integrity = client.integrity(&tokens.experiment_id).await?;
    let conversations: BTreeSet<&ConversationId> = sent.iter().map(|s| &s.conversation).collect();
    let summaries: Vec<ConversationSummary> = summaries
        .into_iter()
        .filter(|s| conversations.contains(&s.conversation.id))
        .collect();
    let (reports, mismatches) = check_transcripts(&summaries, &records, &sent, &names);
    Ok(SimulationReport {
        conversations: reports,
        mismatches,
        integrity_violations: integrity.violations.len(),
    })
}

pub fn parse_export(bytes: &[u8]) -> CliResult<Vec<ExportRecord>> {
    std::str::from_utf8(bytes)
        .map_err(|e| CliError::Invalid(format!("export is not UTF-8: {e}")))?
        .lines()
        .map(|line| serde_json::from_str(line).map_err(|e| CliError::Invalid(format!("export line: {e}"))))
        .collect()
}

async fn connect(url: String, script: AgentScript, tokens: &TokensFile) -> CliResult<Connected> {
    let token = tokens.entry(&script.label).expect("labels checked").token.clone();
    let (mut socket, _) = tokio_tungstenite::connect_async(url.as_str())
        .await
        .map_err(|e| CliError::Transport(format!("{url}: {e}")))?;
    send(&mut socket, &ClientFrame::Auth { token }).await?;
    match recv(&mut socket).await? {
        ServerFrame::AuthOk {
            participant_id,
            display_name,
            open_conversations,
        } => {
            let conversation = match open_conversations.as_slice() {
                [only] => only.clone(),
                [] => {
                    return Err(CliError::Invalid(format!(
                        "`{}` has no open conversation; start a round first",
                        script.label
                    )))
                }
                _ => {
                    return Err(CliError::Invalid(format!(
                        "`{}` has {} open conversations",
                        script.label,
                        open_conversations.len()
                    )))
                }
            };
            Ok(Connected {
                script,
                socket,
                participant: participant_id,
                display_name,
                conversation,
            })
        }
        ServerFrame::Error { code, message } => Err(CliError::Channel { code, message }),
        other => Err(CliError::Transport(format!("unexpected frame {other:?}"))),
    }
}

async fn send(socket: &mut Socket, frame: &ClientFrame) -> CliResult<()> {
    let text = serde_json::to_string(frame).expect("frame serializes");
    socket
        .send(Message::Text(text.into()))
        .await
        .map_err(|e| CliError::Transport(e.to_string()))
}

async fn recv(socket: &mut Socket) -> CliResult<ServerFrame> {
    loop {
        match socket.next().await {
            Some(Ok(Message::Text(text))) => {
                return serde_json::from_str(&text).map_err(|e| CliError::Transport(format!("bad frame: {e}")))
            }
            Some(Ok(Message::Close(_))) | None => return Err(CliError::Transport("connection closed".into())),
            Some(Ok(_)) => continue,
            Some(Err(e)) => return Err(CliError::Transport(e.to_string())),
        }
    }
}

async fn run_agent(mut agent: Connected, expected_peer: usize) -> CliResult<Vec<Sent>> {
    let mut sent = Vec::new();
    let mut peer_seqs = BTreeSet::new();
    let mut awaiting_ack = false;
    loop {
        let next = agent.script.utterances.get(sent.len());
        if !awaiting_ack {
            match next {
                Some(u) if peer_seqs.len() >= u.wait() => {
                    let frame = ClientFrame::Send {
                        conversation_id: agent.conversation.clone(),
                        client_msg_id: format!("{}-{}", agent.script.label, sent.len() + 1),
                        body: u.text.clone(),
                    };
                    send(&mut agent.socket, &frame).await?;
                    awaiting_ack = true;
                }
                None if peer_seqs.len() >= expected_peer => break,
                _ => {}
            }
        }
        match recv(&mut agent.socket).await? {
            ServerFrame::Ack { seq, .. } => {
                let text = agent.script.utterances[sent.len()].text.clone();
                sent.push(Sent {
                    conversation: agent.conversation.clone(),
                    sender: agent.participant.clone(),
                    seq,
                    text,
                });
                awaiting_ack = false;
            }
            ServerFrame::Event {
                author: Some(author),
                seq,
                ..
            } if author.participant_id != agent.participant => {
                peer_seqs.insert(seq);
            }
            ServerFrame::Error { code, message } => {
                return Err(CliError::Channel {
                    code,
                    message: format!("{}: {message}", agent.script.label),
                })
            }
            _ => {}
        }
    }
    let _ = agent.socket.close(None).await;
    Ok(sent)
}

/// Compares the export against what each agent sent: senders must see their own text,
/// every other member must see the output of their assigned transform, at the same seq.
pub fn check_transcripts(
    summaries: &[ConversationSummary],
    records: &[ExportRecord],
    sent: &[Sent],
    names: &BTreeMap<ParticipantId, String>,
) -> (Vec<ConversationReport>, Vec<Mismatch>) {
    let label = |id: &ParticipantId| names.get(id).cloned().unwrap_or_else(|| id.to_string());
    let mut reports = Vec::new();
    let mut mismatches = Vec::new();
    for summary in summaries {
        let conv = &summary.conversation.id;
        let mut views: BTreeMap<&ParticipantId, BTreeMap<u64, &ExportRecord>> = BTreeMap::new();
        for r in records.iter().filter(|r| &r.conversation_id == conv) {
            views.entry(&r.view_owner).or_default().insert(r.seq, r);
        }
        let mut mismatch = |view: &ParticipantId, seq: u64, what: &str, expected: String, actual: String| {
            mismatches.push(Mismatch {
                conversation_id: conv.clone(),
                view: label(view),
                seq,
                what: what.into(),
                expected,
                actual,
            })
        };
        let messages: Vec<&Sent> = sent.iter().filter(|s| &s.conversation == conv).collect();
        let mut altered = 0;
        for member in &summary.conversation.participant_ids {
            let view = views.get(member);
            let len = view.map_or(0, BTreeMap::len) as u64;
            let last = view.and_then(|v| v.keys().next_back().copied()).unwrap_or(0);
            if len != last || len != 1 + messages.len() as u64 {
                mismatch(
                    member,
                    last,
                    "view length",
                    format!("seqs 1..={}", 1 + messages.len()),
                    format!("{len} events, last seq {last}"),
                );
            }
        }
        for message in &messages {
            for member in &summary.conversation.participant_ids {
                let record = views.get(member).and_then(|v| v.get(&message.seq));
                let Some(record) = record else {
                    mismatch(member, message.seq, "missing event", message.text.clone(), String::new());
                    continue;
                };
                let persona = record.author_persona.clone().unwrap_or_default();
                if persona != label(&message.sender) {
                    mismatch(member, message.seq, "author", label(&message.sender), persona);
                }
                if member == &message.sender {
                    if record.body != message.text || record.original_body.is_some() {
                        mismatch(member, message.seq, "sender view", message.text.clone(), record.body.clone());
                    }
                    continue;
                }
                let expected = match summary.condition.get(member) {
                    Some(spec) => apply_transform(spec, &message.text).output,
                    None => message.text.clone(),
                };
                if record.body != expected {
                    mismatch(member, message.seq, "delivered variant", expected, record.body.clone());
                }
                if record.original_body.as_deref() != Some(message.text.as_str()) {
                    mismatch(
                        member,
                        message.seq,
                        "original",
                        message.text.clone(),
                        record.original_body.clone().unwrap_or_default(),
                    );
                }
                if record.body != message.text {
                    altered += 1;
                }
            }
        }
        reports.push(ConversationReport {
            conversation_id: conv.clone(),
            members: summary.conversation.participant_ids.iter().map(label).collect(),
            messages: messages.len(),
            altered_deliveries: altered,
            views: views
                .iter()
                .map(|(owner, events)| {
                    let lines = events
                        .values()
                        .map(|r| TranscriptLine {
                            seq: r.seq,
                            author: r.author_persona.clone().unwrap_or_else(|| "system".into()),
                            body: r.body.clone(),
                        })
                        .collect();
                    (label(owner), lines)
                })
                .collect(),
        });
    }
    (reports, mismatches)
}
