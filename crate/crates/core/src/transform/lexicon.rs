//! Word lists consumed by the transforms, and loaders for their on-disk formats.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::token::{tokenize, TokenKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PosTag {
    #[serde(rename = "VERB")]
    Verb,
    #[serde(rename = "NOUN")]
    Noun,
    #[serde(rename = "ADJ")]
    Adj,
}

impl PosTag {
    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Verb => "VERB",
            PosTag::Noun => "NOUN",
            PosTag::Adj => "ADJ",
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PosTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "VERB" => Ok(PosTag::Verb),
            "NOUN" => Ok(PosTag::Noun),
            "ADJ" => Ok(PosTag::Adj),
            other => Err(Error::validation(format!(
                "unknown tag {other:?}, expected VERB, NOUN or ADJ"
            ))),
        }
    }
}

/// Canonical form of a (possibly multi-word) term: lowercase words joined by single spaces.
///
/// Every word must tokenize as a single word token, otherwise the term could never match.
pub fn canonical_term(raw: &str) -> Result<String> {
    let lowered = raw.to_lowercase();
    let words: Vec<&str> = lowered.split_whitespace().collect();
    if words.is_empty() {
        return Err(Error::validation("empty term"));
    }
    for word in &words {
        let tokens = tokenize(word);
        if tokens.len() != 1 || tokens[0].kind != TokenKind::Word {
            return Err(Error::validation(format!(
                "term {raw:?} contains non-word characters in {word:?}"
            )));
        }
    }
    Ok(words.join(" "))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.trim_end_matches('\r')))
        .filter(|(_, line)| !line.trim().is_empty() && !line.starts_with('#'))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    #[serde(default)]
    pub entries: BTreeMap<String, PosTag>,
    #[serde(default)]
    pub stopwords: BTreeSet<String>,
    #[serde(default)]
    pub terms: Vec<String>,
}

impl Lexicon {
    pub fn new(
        entries: BTreeMap<String, PosTag>,
        stopwords: BTreeSet<String>,
        terms: Vec<String>,
    ) -> Result<Self> {
        let lexicon = Self {
            entries,
            stopwords,
            terms,
        };
        lexicon.validate()?;
        Ok(lexicon)
    }

    pub fn validate(&self) -> Result<()> {
        for key in self.entries.keys().chain(self.stopwords.iter()) {
            if *key != key.to_lowercase() {
                return Err(Error::validation(format!("lexicon key {key:?} is not lowercase")));
            }
        }
        if let Some(both) = self.stopwords.iter().find(|w| self.entries.contains_key(*w)) {
            return Err(Error::validation(format!(
                "{both:?} is both a tagged entry and a stopword"
            )));
        }
        for term in &self.terms {
            if canonical_term(term)? != *term {
                return Err(Error::validation(format!("term {term:?} is not canonical")));
            }
        }
        Ok(())
    }
}

/// Parses a POS lexicon: `word<TAB>TAG` per line, `#` comments.
pub fn parse_pos_lexicon(text: &str) -> Result<BTreeMap<String, PosTag>> {
    let mut entries = BTreeMap::new();
    for (lineno, line) in content_lines(text) {
        let (word, tag) = line.split_once('\t').ok_or_else(|| {
            Error::validation(format!("lexicon line {lineno}: expected word<TAB>TAG"))
        })?;
        let word = word.trim().to_lowercase();
        if word.is_empty() {
            return Err(Error::validation(format!("lexicon line {lineno}: empty word")));
        }
        let tag: PosTag = tag.parse()?;
        if let Some(previous) = entries.insert(word.clone(), tag) {
            if previous != tag {
                return Err(Error::validation(format!(
                    "lexicon line {lineno}: {word:?} tagged both {previous} and {tag}"
                )));
            }
        }
    }
    Ok(entries)
}

pub fn parse_stopwords(text: &str) -> Result<BTreeSet<String>> {
    let mut words = BTreeSet::new();
    for (lineno, line) in content_lines(text) {
        let word = line.trim();
        if word.split_whitespace().count() != 1 {
            return Err(Error::validation(format!(
                "stopword line {lineno}: expected a single word"
            )));
        }
        words.insert(word.to_lowercase());
    }
    Ok(words)
}

pub fn parse_term_list(text: &str) -> Result<Vec<String>> {
    let mut terms = Vec::new();
    for (_, line) in content_lines(text) {
        let term = canonical_term(line)?;
        if !terms.contains(&term) {
            terms.push(term);
        }
    }
    Ok(terms)
}

pub fn parse_swap_map(text: &str) -> Result<SwapMap> {
    let mut pairs = Vec::new();
    for (lineno, line) in content_lines(text) {
        let (a, b) = line.split_once('\t').ok_or_else(|| {
            Error::validation(format!("swap map line {lineno}: expected termA<TAB>termB"))
        })?;
        pairs.push((a.to_owned(), b.to_owned()));
    }
    SwapMap::new(pairs)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

pub fn load_pos_lexicon(path: impl AsRef<Path>) -> Result<BTreeMap<String, PosTag>> {
    parse_pos_lexicon(&read(path.as_ref())?)
}

pub fn load_stopwords(path: impl AsRef<Path>) -> Result<BTreeSet<String>> {
    parse_stopwords(&read(path.as_ref())?)
}

pub fn load_term_list(path: impl AsRef<Path>) -> Result<Vec<String>> {
    parse_term_list(&read(path.as_ref())?)
}

pub fn load_swap_map(path: impl AsRef<Path>) -> Result<SwapMap> {
    parse_swap_map(&read(path.as_ref())?)
}

/// A symmetric bijection between task terms.
///
/// Besides symmetry, construction rejects term sets on which a single left-to-right
/// replacement pass could not be undone by a second pass: one term occurring inside
/// another, or the tail of one term overlapping the head of another.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(String, String)>", into = "Vec<(String, String)>")]
pub struct SwapMap {
    partner: BTreeMap<String, String>,
}

impl SwapMap {
    pub fn new<I, A, B>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (A, B)>,
        A: AsRef<str>,
        B: AsRef<str>,
    {
        let mut partner = BTreeMap::new();
        for (a, b) in pairs {
            let a = canonical_term(a.as_ref())?;
            let b = canonical_term(b.as_ref())?;
            if a == b {
                return Err(Error::validation(format!("term {a:?} is paired with itself")));
            }
            for (x, y) in [(&a, &b), (&b, &a)] {
                match partner.get(x) {
                    Some(existing) if existing == y => {}
                    Some(existing) => {
                        return Err(Error::validation(format!(
                            "swap chain: {x:?} paired with both {existing:?} and {y:?}"
                        )))
                    }
                    None => {
                        partner.insert(x.clone(), y.clone());
                    }
                }
            }
        }
        if partner.is_empty() {
            return Err(Error::validation("swap map has no pairs"));
        }
        check_overlaps(partner.keys())?;
        Ok(Self { partner })
    }

    pub fn partner(&self, term: &str) -> Option<&str> {
        self.partner.get(term).map(String::as_str)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.partner.keys().map(String::as_str)
    }

    /// Each unordered pair once, smaller term first.
    pub fn pairs(&self) -> Vec<(String, String)> {
        self.partner
            .iter()
            .filter(|(a, b)| a < b)
            .map(|(a, b)| (a.clone(), b.clone()))
            .collect()
    }
}

impl TryFrom<Vec<(String, String)>> for SwapMap {
    type Error = Error;

    fn try_from(pairs: Vec<(String, String)>) -> Result<Self> {
        SwapMap::new(pairs)
    }
}

impl From<SwapMap> for Vec<(String, String)> {
    fn from(map: SwapMap) -> Self {
        map.pairs()
    }
}

fn check_overlaps<'a>(terms: impl Iterator<Item = &'a String>) -> Result<()> {
    let words: Vec<Vec<&str>> = terms.map(|t| t.split(' ').collect()).collect();
    for (i, a) in words.iter().enumerate() {
        for (j, b) in words.iter().enumerate() {
            if i != j && a.len() < b.len() && b.windows(a.len()).any(|w| w == a.as_slice()) {
                return Err(Error::validation(format!(
                    "swap term {:?} occurs inside {:?}",
                    a.join(" "),
                    b.join(" ")
                )));
            }
            for k in 1..a.len().min(b.len()) {
                if a[a.len() - k..] == b[..k] {
                    return Err(Error::validation(format!(
                        "swap terms {:?} and {:?} overlap",
                        a.join(" "),
                        b.join(" ")
                    )));
                }
            }
        }
    }
    Ok(())
}
