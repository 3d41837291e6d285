#![allow(dead_code)]

use std::collections::BTreeMap;

use relaylab_core::transform::{SwapMap, TransformSpec};
use relaylab_core::*;

pub const PROMPT: &str = "A balloon with four passengers is losing height. Agree on who must jump.";

pub fn swap() -> TransformSpec {
    TransformSpec::lexicon_swap(SwapMap::new([("pilot", "doctor")]).unwrap())
}

pub fn config(name: &str, rounds: usize, conditions: Vec<ConditionTemplate>) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        rounds,
        task: TaskConfig {
            prompt_text: PROMPT.into(),
            terms: vec![
                "pilot".into(),
                "pilot's pregnant wife".into(),
                "child prodigy".into(),
                "doctor".into(),
            ],
        },
        conditions,
    }
}

pub fn identity_condition() -> ConditionTemplate {
    ConditionTemplate {
        target: ConditionTarget::Second,
        transform: TransformSpec::identity(),
    }
}

pub struct Dyad {
    pub platform: Platform,
    pub experiment: Experiment,
    pub a: Registration,
    pub b: Registration,
    pub conversation: ConversationId,
}

/// Two participants in one conversation; `b` receives `a`'s messages through `on_b`.
pub fn dyad(on_b: TransformSpec) -> Dyad {
    dyad_on(Platform::in_memory().unwrap(), on_b)
}

pub fn dyad_on(platform: Platform, on_b: TransformSpec) -> Dyad {
    let experiment = platform
        .create_experiment(config("dyad", 1, vec![identity_condition()]))
        .unwrap();
    let a = platform.register_participant(&experiment.id, "Alice").unwrap();
    let b = platform.register_participant(&experiment.id, "Bob").unwrap();
    let condition = BTreeMap::from([
        (a.participant.id.clone(), TransformSpec::identity()),
        (b.participant.id.clone(), on_b),
    ]);
    let conv = platform
        .open_conversation(
            &experiment.id,
            &[a.participant.id.clone(), b.participant.id.clone()],
            condition,
        )
        .unwrap();
    Dyad {
        platform,
        experiment,
        a,
        b,
        conversation: conv.id,
    }
}
