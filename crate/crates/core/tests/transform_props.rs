//! Property tests for the transform algebra.

use std::collections::BTreeSet;

use proptest::prelude::*;
use relaylab_core::transform::*;

const WORDS: &[&str] = &[
    "pilot", "Pilot", "PILOT", "doctor", "Doctor", "DOCTOR", "child", "prodigy", "Child",
    "wife", "pilot's", "pregnant", "the", "save", "we", "should", "balloon", "flies", "p1lot",
    "piLot", "a", "A", "cancer", "ok",
];
const SEPARATORS: &[&str] = &[" ", " ", " ", "  ", ", ", "! ", "\n", "'", "-", "? "];

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec((prop::sample::select(WORDS), prop::sample::select(SEPARATORS)), 0..12)
        .prop_map(|parts| parts.into_iter().flat_map(|(w, s)| [w, s]).collect())
}

fn any_text() -> impl Strategy<Value = String> {
    prop_oneof![sentence(), any::<String>(), "[a-zA-Z0-9' ,.!é\u{2019}]{0,40}"]
}

fn pairs() -> SwapMap {
    SwapMap::new([("pilot", "doctor"), ("child prodigy", "pilot's pregnant wife")]).unwrap()
}

fn specs() -> Vec<TransformSpec> {
    let lexicon = Lexicon::new(
        parse_pos_lexicon("pilot\tNOUN\ndoctor\tNOUN\nflies\tVERB\nsave\tVERB\npregnant\tADJ\n").unwrap(),
        parse_stopwords("the\nwe\nshould\na\n").unwrap(),
        vec![],
    )
    .unwrap();
    vec![
        TransformSpec::identity(),
        TransformSpec::pos_remove([PosTag::Noun, PosTag::Adj], lexicon).unwrap(),
        TransformSpec::stopword_remove(["the", "we", "should"]).unwrap(),
        TransformSpec::lexicon_remove(["pilot", "child prodigy", "pilot's pregnant wife"]).unwrap(),
        TransformSpec::lexicon_swap(pairs()),
        TransformSpec::lexicon_swap(pairs()).with_robust_matching(true),
        TransformSpec::lexicon_remove(["pilot", "doctor"]).unwrap().with_robust_matching(true),
    ]
}

fn words(text: &str) -> Vec<String> {
    tokenize(text).into_iter().filter(Token::is_word).map(|t| t.text).collect()
}

fn is_subsequence(small: &[String], big: &[String]) -> bool {
    let mut it = big.iter();
    small.iter().all(|w| it.any(|b| b == w))
}

proptest! {
    #[test]
    fn tokenizer_round_trips(text in any_text()) {
        let tokens = tokenize(&text);
        let joined: String = tokens.iter().map(|t| t.text.as_str()).collect();
        prop_assert_eq!(joined, text.clone());
        let mut at = 0;
        for t in &tokens {
            prop_assert_eq!(t.span.start, at);
            prop_assert_eq!(t.span.end - t.span.start, t.text.chars().count());
            at = t.span.end;
        }
    }

    #[test]
    fn swap_is_an_involution(text in sentence()) {
        let map = pairs();
        let once = lexicon_swap(&text, &map);
        prop_assert_eq!(lexicon_swap(&once.output, &map).output, text);
    }

    #[test]
    fn removals_are_monotone(text in any_text()) {
        for spec in specs().iter().filter(|s| !matches!(s.kind, TransformKind::LexiconSwap { .. })) {
            let out = apply_transform(spec, &text);
            prop_assert!(out.output.chars().count() <= text.chars().count());
            prop_assert!(is_subsequence(&words(&out.output), &words(&text)));
        }
    }

    #[test]
    fn traces_replay_exactly(text in any_text()) {
        for spec in specs() {
            let out = apply_transform(&spec, &text);
            prop_assert!(!out.trace.failed);
            prop_assert_eq!(out.trace.replay(&text).unwrap(), out.output.clone());
            let ends: Vec<(usize, usize)> = out.trace.edits.iter().map(|e| (e.start, e.end)).collect();
            prop_assert!(ends.windows(2).all(|w| w[0].1 <= w[1].0));
        }
    }

    #[test]
    fn transforms_are_pure(text in any_text()) {
        for spec in specs() {
            prop_assert_eq!(apply_transform(&spec, &text), apply_transform(&spec, &text));
        }
    }

    #[test]
    fn no_hit_means_no_change(text in "[bcfghjkmnqvxz ,.]{0,40}") {
        for spec in specs() {
            let out = apply_transform(&spec, &text);
            prop_assert_eq!(&out.output, &text);
            prop_assert!(out.trace.edits.is_empty());
        }
    }

    #[test]
    fn punctuation_is_never_removed(text in sentence()) {
        let punct = |s: &str| -> Vec<char> {
            s.chars().filter(|c| !c.is_whitespace() && !c.is_alphanumeric() && *c != '\'').collect()
        };
        for spec in specs() {
            prop_assert_eq!(punct(&apply_transform(&spec, &text).output), punct(&text));
        }
    }
}

#[test]
fn tagged_fixture_sentence_is_emptied() {
    let lexicon = Lexicon::new(
        parse_pos_lexicon("pilot\tNOUN\ndoctor\tNOUN\nchild\tNOUN\n").unwrap(),
        BTreeSet::new(),
        vec![],
    )
    .unwrap();
    let tags: BTreeSet<PosTag> = [PosTag::Noun].into();
    assert_eq!(pos_remove("pilot doctor child", &tags, &lexicon).unwrap().output, "");
}
