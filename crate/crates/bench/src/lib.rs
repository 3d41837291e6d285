//! Shared inputs for the criterion benches.

use std::collections::BTreeMap;

use relaylab_core::model::{ConditionTemplate, ExperimentConfig, TaskConfig};
use relaylab_core::transform::{parse_pos_lexicon, parse_stopwords, Lexicon, PosTag, SwapMap, TransformSpec};
use relaylab_core::{Conversation, ParticipantId, Platform};

pub const SENTENCE: &str =
    "Honestly I think the pilot's pregnant wife should stay, the doctor can jump and the child prodigy flies the balloon! ";

/// `SENTENCE` repeated until the text has at least `chars` characters.
pub fn text_of(chars: usize) -> String {
    SENTENCE.repeat(chars.div_ceil(SENTENCE.len()))
}

pub fn swap_map() -> SwapMap {
    SwapMap::new([("pilot", "doctor"), ("child prodigy", "pilot's pregnant wife")]).unwrap()
}

pub fn lexicon() -> Lexicon {
    Lexicon::new(
        parse_pos_lexicon("pilot\tNOUN\ndoctor\tNOUN\nwife\tNOUN\nballoon\tNOUN\nstay\tVERB\njump\tVERB\nflies\tVERB\npregnant\tADJ\n")
            .unwrap(),
        parse_stopwords("the\nand\ni\ncan\nshould\n").unwrap(),
        vec![],
    )
    .unwrap()
}

pub fn specs() -> Vec<(&'static str, TransformSpec)> {
    vec![
        ("identity", TransformSpec::identity()),
        ("pos_remove", TransformSpec::pos_remove([PosTag::Noun, PosTag::Verb], lexicon()).unwrap()),
        ("stopword_remove", TransformSpec::stopword_remove(["the", "and", "i", "can"]).unwrap()),
        (
            "lexicon_remove_robust",
            TransformSpec::lexicon_remove(["pilot", "doctor", "child prodigy"])
                .unwrap()
                .with_robust_matching(true),
        ),
        ("lexicon_swap", TransformSpec::lexicon_swap(swap_map())),
    ]
}

/// An open conversation of `people` participants, everyone but the first on the swap.
pub fn conversation(platform: &Platform, people: usize) -> Conversation {
    let exp = platform
        .create_experiment(ExperimentConfig {
            name: format!("bench-{people}-{}", relaylab_core::ConversationId::generate()),
            rounds: 1,
            task: TaskConfig {
                prompt_text: "Who leaves the balloon?".into(),
                terms: vec!["pilot".into(), "doctor".into()],
            },
            conditions: vec![ConditionTemplate {
                target: Default::default(),
                transform: TransformSpec::lexicon_swap(swap_map()),
            }],
        })
        .unwrap();
    let ids: Vec<ParticipantId> = (0..people)
        .map(|i| platform.register_participant(&exp.id, &format!("P{i}")).unwrap().participant.id)
        .collect();
    let condition: BTreeMap<_, _> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let spec = if i == 0 {
                TransformSpec::identity()
            } else {
                TransformSpec::lexicon_swap(swap_map())
            };
            (id.clone(), spec)
        })
        .collect();
    platform.open_conversation(&exp.id, &ids, condition).unwrap()
}
