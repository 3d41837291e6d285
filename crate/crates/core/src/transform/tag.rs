use serde::{Deserialize, Serialize};

use super::lexicon::{Lexicon, PosTag};
use super::matcher::robust_match_normalize;
use super::token::Token;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tag {
    #[serde(rename = "VERB")]
    Verb,
    #[serde(rename = "NOUN")]
    Noun,
    #[serde(rename = "ADJ")]
    Adj,
    #[serde(rename = "STOP")]
    Stop,
    #[serde(rename = "UNKNOWN")]
    Unknown,
}

impl Tag {
    pub fn pos(self) -> Option<PosTag> {
        match self {
            Tag::Verb => Some(PosTag::Verb),
            Tag::Noun => Some(PosTag::Noun),
            Tag::Adj => Some(PosTag::Adj),
            Tag::Stop | Tag::Unknown => None,
        }
    }
}

impl From<PosTag> for Tag {
    fn from(tag: PosTag) -> Self {
        match tag {
            PosTag::Verb => Tag::Verb,
            PosTag::Noun => Tag::Noun,
            PosTag::Adj => Tag::Adj,
        }
    }
}

/// Assigns a tag to a single word. Implementations must be deterministic.
pub trait Tagger {
    fn tag_word(&self, word: &str) -> Tag;
}

/// Dictionary lookup on the lowercase (or, in robust mode, digit-normalized) word form.
#[derive(Debug, Clone, Copy)]
pub struct LexiconTagger<'a> {
    lexicon: &'a Lexicon,
    robust: bool,
}

impl<'a> LexiconTagger<'a> {
    pub fn new(lexicon: &'a Lexicon) -> Self {
        Self {
            lexicon,
            robust: false,
        }
    }

    pub fn robust(mut self, robust: bool) -> Self {
        self.robust = robust;
        self
    }
}

impl Tagger for LexiconTagger<'_> {
    fn tag_word(&self, word: &str) -> Tag {
        let key = if self.robust {
            robust_match_normalize(word)
        } else {
            word.to_lowercase()
        };
        if let Some(tag) = self.lexicon.entries.get(&key) {
            (*tag).into()
        } else if self.lexicon.stopwords.contains(&key) {
            Tag::Stop
        } else {
            Tag::Unknown
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedToken {
    pub token: Token,
    /// `None` for punctuation and whitespace.
    pub tag: Option<Tag>,
}

pub fn tag_tokens(tokens: Vec<Token>, tagger: &dyn Tagger) -> Vec<TaggedToken> {
    tokens
        .into_iter()
        .map(|token| {
            let tag = token.is_word().then(|| tagger.tag_word(&token.text));
            TaggedToken { token, tag }
        })
        .collect()
}
