//! Whole-store audit of the relay invariants.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ids::{ConversationId, ExperimentId, MessageId, ParticipantId};
use crate::platform::Platform;
use crate::store;
use crate::transform::apply_transform;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    MissingVariant {
        message_id: MessageId,
        recipient: ParticipantId,
    },
    UnexpectedVariant {
        message_id: MessageId,
        recipient: ParticipantId,
    },
    SequenceGap {
        conversation_id: ConversationId,
        owner: ParticipantId,
        expected: u64,
        found: u64,
    },
    MissingView {
        conversation_id: ConversationId,
        owner: ParticipantId,
    },
    SenderViewMismatch {
        message_id: MessageId,
    },
    TraceReplayMismatch {
        message_id: MessageId,
        recipient: ParticipantId,
        detail: String,
    },
    TransformAuditMismatch {
        message_id: MessageId,
        recipient: ParticipantId,
    },
    PersonaMismatch {
        message_id: MessageId,
        recipient: ParticipantId,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrityReport {
    pub experiment_id: ExperimentId,
    pub conversations: usize,
    pub messages: usize,
    pub deliveries: usize,
    pub violations: Vec<Violation>,
}

impl IntegrityReport {
    pub fn is_healthy(&self) -> bool {
        self.violations.is_empty()
    }
}

impl Platform {
    /// Checks variant completeness, gapless view sequences, sender-view purity, trace
    /// replay and that every variant re-derives from its recipient's condition.
    pub fn verify_integrity(&self, experiment: &ExperimentId) -> Result<IntegrityReport> {
        self.store.read(|conn| {
            store::experiment(conn, experiment)?;
            let mut report = IntegrityReport {
                experiment_id: experiment.clone(),
                conversations: 0,
                messages: 0,
                deliveries: 0,
                violations: Vec::new(),
            };
            let violations = &mut report.violations;
            for (conv, condition) in store::conversations(conn, experiment)? {
                report.conversations += 1;
                let events = store::conversation_view_events(conn, &conv.id)?;
                for owner in &conv.participant_ids {
                    let seqs: Vec<u64> = events.iter().filter(|e| &e.owner == owner).map(|e| e.seq).collect();
                    if seqs.is_empty() {
                        violations.push(Violation::MissingView {
                            conversation_id: conv.id.clone(),
                            owner: owner.clone(),
                        });
                    }
                    if let Some((expected, found)) = (1u64..)
                        .zip(seqs.iter().copied())
                        .find(|(want, got)| want != got)
                    {
                        violations.push(Violation::SequenceGap {
                            conversation_id: conv.id.clone(),
                            owner: owner.clone(),
                            expected,
                            found,
                        });
                    }
                }

                for message in store::messages(conn, &conv.id)? {
                    report.messages += 1;
                    let own_ok = events.iter().any(|e| {
                        e.owner == message.sender
                            && e.message_id.as_ref() == Some(&message.id)
                            && e.body == message.body
                    });
                    if !own_ok {
                        violations.push(Violation::SenderViewMismatch {
                            message_id: message.id.clone(),
                        });
                    }

                    let variants = store::deliveries(conn, &message.id)?;
                    report.deliveries += variants.len();
                    let expected: BTreeSet<&ParticipantId> = conv
                        .participant_ids
                        .iter()
                        .filter(|p| **p != message.sender)
                        .collect();
                    let present: BTreeSet<&ParticipantId> = variants.iter().map(|v| &v.recipient).collect();
                    for missing in expected.difference(&present) {
                        violations.push(Violation::MissingVariant {
                            message_id: message.id.clone(),
                            recipient: (*missing).clone(),
                        });
                    }
                    for extra in present.difference(&expected) {
                        violations.push(Violation::UnexpectedVariant {
                            message_id: message.id.clone(),
                            recipient: (*extra).clone(),
                        });
                    }

                    for variant in &variants {
                        if variant.persona != message.sender {
                            violations.push(Violation::PersonaMismatch {
                                message_id: message.id.clone(),
                                recipient: variant.recipient.clone(),
                            });
                        }
                        match variant.transform_trace.replay(&message.body) {
                            Ok(replayed) if replayed == variant.delivered_body => {}
                            Ok(replayed) => violations.push(Violation::TraceReplayMismatch {
                                message_id: message.id.clone(),
                                recipient: variant.recipient.clone(),
                                detail: format!("replay gives {replayed:?}"),
                            }),
                            Err(err) => violations.push(Violation::TraceReplayMismatch {
                                message_id: message.id.clone(),
                                recipient: variant.recipient.clone(),
                                detail: err.to_string(),
                            }),
                        }
                        let rederived = condition
                            .get(&variant.recipient)
                            .map(|spec| apply_transform(spec, &message.body).output);
                        if rederived.as_deref() != Some(variant.delivered_body.as_str()) {
                            violations.push(Violation::TransformAuditMismatch {
                                message_id: message.id.clone(),
                                recipient: variant.recipient.clone(),
                            });
                        }
                    }
                }
            }
            Ok(report)
        })
    }
}
