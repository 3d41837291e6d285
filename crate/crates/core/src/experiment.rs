//! Experiment lifecycle: creation, registration, pairing schedule, condition assignment
//! and round-by-round conversation opening.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{ConversationId, ExperimentId, ParticipantId};
use crate::model::*;
use crate::platform::{hash_token, new_token, Platform};
use crate::relay::{close_in, open_conversation_in, validate_condition};
use crate::schedule::{generate_round_robin_schedule, PairingSchedule};
use crate::store::{self, Entity};
use crate::transform::{canonical_term, TransformKind, TransformSpec};

/// A conversation together with its current condition, for administrative listings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationSummary {
    #[serde(flatten)]
    pub conversation: Conversation,
    pub condition: BTreeMap<ParticipantId, TransformSpec>,
    pub message_count: u64,
}

impl Platform {
    pub fn create_experiment(&self, config: ExperimentConfig) -> Result<Experiment> {
        let name = config.name.trim();
        if name.is_empty() {
            return Err(Error::validation("experiment name is empty"));
        }
        if config.rounds == 0 {
            return Err(Error::validation("an experiment needs at least one round"));
        }
        if config.task.prompt_text.trim().is_empty() {
            return Err(Error::validation("task prompt is empty"));
        }
        let terms = config
            .task
            .terms
            .iter()
            .map(|t| canonical_term(t))
            .collect::<Result<Vec<_>>>()?;
        for condition in &config.conditions {
            condition.transform.validate()?;
            let lexical = matches!(
                condition.transform.kind,
                TransformKind::LexiconRemove { .. } | TransformKind::LexiconSwap { .. }
            );
            if lexical && terms.is_empty() {
                return Err(Error::validation(
                    "task terms must be non-empty when a lexicon transform is configured",
                ));
            }
        }
        let experiment = Experiment {
            id: ExperimentId::generate(),
            name: name.to_owned(),
            task: TaskConfig {
                prompt_text: config.task.prompt_text,
                terms,
            },
            rounds: config.rounds,
            conditions: config.conditions,
            rounds_started: 0,
            created_at: now(),
        };
        self.store.record(Entity::Experiment(&experiment))?;
        Ok(experiment)
    }

    pub fn experiment(&self, id: &ExperimentId) -> Result<Experiment> {
        self.store.read(|conn| store::experiment(conn, id))
    }

    pub fn experiments(&self) -> Result<Vec<Experiment>> {
        self.store.read(store::experiments)
    }

    pub fn participants(&self, experiment: &ExperimentId) -> Result<Vec<Participant>> {
        self.store.read(|conn| {
            store::experiment(conn, experiment)?;
            store::participants(conn, experiment)
        })
    }

    /// Registers a participant and returns their token. The token is only ever returned here.
    pub fn register_participant(&self, experiment: &ExperimentId, display_name: &str) -> Result<Registration> {
        let display_name = display_name.trim();
        if display_name.is_empty() {
            return Err(Error::validation("display name is empty"));
        }
        self.store.write(|tx| {
            let exp = store::experiment(tx, experiment)?;
            if exp.rounds_started > 0 {
                return Err(Error::state("registration is closed once a round has started"));
            }
            let participant = Participant {
                id: ParticipantId::generate(),
                experiment_id: exp.id,
                display_name: display_name.to_owned(),
                created_at: now(),
            };
            let token = new_token();
            store::record_in(
                tx,
                Entity::Participant {
                    participant: &participant,
                    token_hash: &hash_token(&token),
                },
            )?;
            Ok(Registration { participant, token })
        })
    }

    /// Pairs the registered participants (in registration order) for every round of the
    /// experiment. May be regenerated until the first round starts.
    pub fn generate_schedule(&self, experiment: &ExperimentId) -> Result<PairingSchedule<ParticipantId>> {
        self.store.write(|tx| {
            let exp = store::experiment(tx, experiment)?;
            if exp.rounds_started > 0 {
                return Err(Error::state("the schedule is fixed once a round has started"));
            }
            let ids: Vec<ParticipantId> = store::participants(tx, experiment)?
                .into_iter()
                .map(|p| p.id)
                .collect();
            let schedule = generate_round_robin_schedule(&ids, exp.rounds)?;
            store::set_schedule(tx, experiment, &schedule)?;
            store::log_snapshot(
                tx,
                EntityKind::Experiment,
                experiment.as_str(),
                &serde_json::json!({ "experiment": exp, "schedule": &schedule }),
            )?;
            Ok(schedule)
        })
    }

    pub fn schedule(&self, experiment: &ExperimentId) -> Result<Option<PairingSchedule<ParticipantId>>> {
        self.store
            .read(|conn| Ok(store::experiment_with_schedule(conn, experiment)?.1))
    }

    /// Replaces a conversation's per-recipient condition. Only allowed before its first message.
    pub fn assign_condition(
        &self,
        conversation: &ConversationId,
        per_recipient: BTreeMap<ParticipantId, TransformSpec>,
    ) -> Result<ConditionAssignment> {
        self.store.write(|tx| {
            let (conv, _) = store::conversation(tx, conversation)?;
            if store::message_count(tx, conversation)? > 0 {
                return Err(Error::state(
                    "conditions are frozen once the conversation has messages",
                ));
            }
            validate_condition(&conv.participant_ids, &per_recipient)?;
            store::set_condition(tx, conversation, &per_recipient)?;
            store::log_snapshot(
                tx,
                EntityKind::Conversation,
                conversation.as_str(),
                &serde_json::json!({ "conversation": &conv, "condition": &per_recipient }),
            )?;
            Ok(ConditionAssignment {
                conversation_id: conversation.clone(),
                per_recipient,
            })
        })
    }

    /// Opens one conversation per scheduled pair of `round_index`. Conditions are handed
    /// out from the experiment's templates in rotation over all scheduled pairs.
    pub fn start_round(&self, experiment: &ExperimentId, round_index: usize) -> Result<Vec<ConversationId>> {
        self.store.write(|tx| {
            let (mut exp, schedule) = store::experiment_with_schedule(tx, experiment)?;
            if round_index != exp.rounds_started {
                return Err(Error::state(format!(
                    "round {round_index} cannot start; next round is {}",
                    exp.rounds_started
                )));
            }
            if round_index >= exp.rounds {
                return Err(Error::state(format!(
                    "experiment has only {} rounds",
                    exp.rounds
                )));
            }
            let schedule =
                schedule.ok_or_else(|| Error::state("no pairing schedule has been generated"))?;
            let registered = store::participants(tx, experiment)?.len();
            let scheduled = schedule.rounds[0].pairs.len() * 2
                + usize::from(schedule.rounds[0].bye.is_some());
            if registered != scheduled {
                return Err(Error::state(
                    "participants changed since the schedule was generated; regenerate it",
                ));
            }
            if exp.conditions.is_empty() {
                return Err(Error::state("missing condition assignment: experiment has no conditions"));
            }
            let offset: usize = schedule.rounds[..round_index]
                .iter()
                .map(|r| r.pairs.len())
                .sum();
            let mut opened = Vec::new();
            for (k, pair) in schedule.rounds[round_index].pairs.iter().enumerate() {
                let template = &exp.conditions[(offset + k) % exp.conditions.len()];
                let condition = template.per_recipient(&pair.first, &pair.second);
                let conv = open_conversation_in(
                    tx,
                    experiment,
                    &[pair.first.clone(), pair.second.clone()],
                    condition,
                    Some(round_index),
                )?;
                opened.push(conv.id);
            }
            exp.rounds_started = round_index + 1;
            store::set_rounds_started(tx, experiment, exp.rounds_started)?;
            store::log_snapshot(tx, EntityKind::Experiment, experiment.as_str(), &exp)?;
            Ok(opened)
        })
    }

    /// Closes every conversation of a round; returns the ones that were touched.
    pub fn close_round(&self, experiment: &ExperimentId, round_index: usize) -> Result<Vec<ConversationId>> {
        self.store.write(|tx| {
            let exp = store::experiment(tx, experiment)?;
            if round_index >= exp.rounds_started {
                return Err(Error::state(format!("round {round_index} has not started")));
            }
            let mut closed = Vec::new();
            for (conv, _) in store::conversations(tx, experiment)? {
                if conv.round_index == Some(round_index) {
                    close_in(tx, &conv.id)?;
                    closed.push(conv.id);
                }
            }
            Ok(closed)
        })
    }

    pub fn conversations(&self, experiment: &ExperimentId) -> Result<Vec<ConversationSummary>> {
        self.store.read(|conn| {
            store::experiment(conn, experiment)?;
            store::conversations(conn, experiment)?
                .into_iter()
                .map(|(conversation, condition)| {
                    let message_count = store::message_count(conn, &conversation.id)?;
                    Ok(ConversationSummary {
                        conversation,
                        condition,
                        message_count,
                    })
                })
                .collect()
        })
    }
}
