//! Deterministic text manipulation: tokenization, lexicon tagging, and the transforms
//! applied to relayed messages.

mod lexicon;
mod matcher;
mod ops;
mod spec;
mod tag;
mod token;
mod trace;

pub use lexicon::{
    canonical_term, load_pos_lexicon, load_stopwords, load_swap_map, load_term_list,
    parse_pos_lexicon, parse_stopwords, parse_swap_map, parse_term_list, Lexicon, PosTag, SwapMap,
};
pub use matcher::{robust_match_normalize, TermMatch, TermMatcher};
pub use ops::TransformResult;
pub use spec::{
    apply_transform, lexicon_remove, lexicon_swap, pos_remove, stopword_remove, TransformKind,
    TransformSpec,
};
pub use tag::{tag_tokens, LexiconTagger, Tag, TaggedToken, Tagger};
pub use token::{tokenize, Token, TokenKind};
pub use trace::{replay_edits, Edit, ReplayError, TraceRecord};

pub const PIPELINE_VERSION: &str = "relaylab-transform/1";
