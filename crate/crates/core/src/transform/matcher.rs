//! Longest-match-first term matching over word tokens.

use std::collections::HashMap;

use super::token::{Token, TokenKind};

/// Lowercases and undoes common letter-to-digit substitutions.
pub fn robust_match_normalize(word: &str) -> String {
    word.chars()
        .flat_map(char::to_lowercase)
        .map(|c| match c {
            '0' => 'o',
            '1' => 'i',
            '3' => 'e',
            '4' => 'a',
            '5' => 's',
            '7' => 't',
            other => other,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermMatch {
    pub first_token: usize,
    /// Inclusive.
    pub last_token: usize,
    pub term: usize,
}

/// Matches canonical terms against runs of word tokens separated by single spaces.
///
/// Exact mode compares lowercase words one-to-one. Robust mode compares the
/// concatenation of normalized words, so split syllables and digit spellings still hit.
#[derive(Debug, Clone)]
pub struct TermMatcher {
    terms: Vec<String>,
    robust: bool,
    exact: HashMap<Vec<String>, usize>,
    collapsed: HashMap<String, usize>,
    max_words: usize,
    max_key_chars: usize,
}

impl TermMatcher {
    pub fn new<S: AsRef<str>>(terms: impl IntoIterator<Item = S>, robust: bool) -> Self {
        let terms: Vec<String> = terms.into_iter().map(|t| t.as_ref().to_owned()).collect();
        let mut exact = HashMap::new();
        let mut collapsed = HashMap::new();
        let mut max_words = 0;
        let mut max_key_chars = 0;
        for (index, term) in terms.iter().enumerate() {
            let words: Vec<String> = term.split(' ').map(str::to_owned).collect();
            max_words = max_words.max(words.len());
            let key = robust_match_normalize(&words.concat());
            max_key_chars = max_key_chars.max(key.chars().count());
            exact.entry(words).or_insert(index);
            collapsed.entry(key).or_insert(index);
        }
        Self {
            terms,
            robust,
            exact,
            collapsed,
            max_words,
            max_key_chars,
        }
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn find_all(&self, tokens: &[Token]) -> Vec<TermMatch> {
        let mut matches = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            if tokens[i].kind == TokenKind::Word {
                if let Some(found) = self.longest_at(tokens, i) {
                    i = found.last_token + 1;
                    matches.push(found);
                    continue;
                }
            }
            i += 1;
        }
        matches
    }

    fn longest_at(&self, tokens: &[Token], start: usize) -> Option<TermMatch> {
        let mut best = None;
        let mut words: Vec<String> = Vec::new();
        let mut key = String::new();
        let mut key_chars = 0;
        let mut last = start;
        loop {
            let word = &tokens[last].text;
            if self.robust {
                let norm = robust_match_normalize(word);
                key_chars += norm.chars().count();
                if key_chars > self.max_key_chars {
                    break;
                }
                key.push_str(&norm);
                if let Some(&term) = self.collapsed.get(&key) {
                    best = Some(TermMatch {
                        first_token: start,
                        last_token: last,
                        term,
                    });
                }
            } else {
                if words.len() == self.max_words {
                    break;
                }
                words.push(word.to_lowercase());
                if let Some(&term) = self.exact.get(&words) {
                    best = Some(TermMatch {
                        first_token: start,
                        last_token: last,
                        term,
                    });
                }
            }
            match (tokens.get(last + 1), tokens.get(last + 2)) {
                (Some(gap), Some(next)) if gap.text == " " && next.kind == TokenKind::Word => {
                    last += 2;
                }
                _ => break,
            }
        }
        best
    }
}
