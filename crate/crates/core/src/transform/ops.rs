//! The concrete text manipulations. All functions are pure.

use std::collections::BTreeSet;

use super::lexicon::{PosTag, SwapMap};
use super::matcher::{robust_match_normalize, TermMatcher};
use super::tag::{tag_tokens, Tag, Tagger};
use super::token::{tokenize, Token, TokenKind};
use super::trace::{Edit, TraceRecord};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformResult {
    pub output: String,
    pub trace: TraceRecord,
}

/// Output text plus the edits that produced it, before a spec summary is attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Rewrite {
    pub output: String,
    pub edits: Vec<Edit>,
}

impl Rewrite {
    pub(crate) fn into_result(self, spec: impl Into<String>) -> TransformResult {
        TransformResult {
            output: self.output,
            trace: TraceRecord::new(spec, self.edits),
        }
    }
}

fn joined(tokens: &[Token]) -> String {
    tokens.iter().map(|t| t.text.as_str()).collect()
}

/// Deletes each inclusive token range together with the whitespace run that directly
/// follows it, if any. Ranges must be ordered and disjoint.
fn delete_ranges(tokens: &[Token], ranges: &[(usize, usize)]) -> Rewrite {
    let mut output = String::new();
    let mut edits = Vec::with_capacity(ranges.len());
    let mut cursor = 0;
    for &(first, last) in ranges {
        let mut last = last;
        if tokens
            .get(last + 1)
            .is_some_and(|t| t.kind == TokenKind::Whitespace)
        {
            last += 1;
        }
        output.push_str(&joined(&tokens[cursor..first]));
        edits.push(Edit {
            start: tokens[first].span.start,
            end: tokens[last].span.end,
            original: joined(&tokens[first..=last]),
            replacement: String::new(),
        });
        cursor = last + 1;
    }
    output.push_str(&joined(&tokens[cursor..]));
    Rewrite { output, edits }
}

pub(crate) fn pos_remove_with(text: &str, tags: &BTreeSet<PosTag>, tagger: &dyn Tagger) -> Rewrite {
    let tagged = tag_tokens(tokenize(text), tagger);
    let ranges: Vec<(usize, usize)> = tagged
        .iter()
        .enumerate()
        .filter(|(_, t)| {
            t.tag
                .and_then(Tag::pos)
                .is_some_and(|pos| tags.contains(&pos))
        })
        .map(|(i, _)| (i, i))
        .collect();
    let tokens: Vec<Token> = tagged.into_iter().map(|t| t.token).collect();
    delete_ranges(&tokens, &ranges)
}

pub(crate) fn stopword_remove_with(text: &str, stopwords: &BTreeSet<String>, robust: bool) -> Rewrite {
    let tokens = tokenize(text);
    let ranges: Vec<(usize, usize)> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| {
            t.is_word() && {
                let key = if robust {
                    robust_match_normalize(&t.text)
                } else {
                    t.text.to_lowercase()
                };
                stopwords.contains(&key)
            }
        })
        .map(|(i, _)| (i, i))
        .collect();
    delete_ranges(&tokens, &ranges)
}

pub(crate) fn lexicon_remove_with(text: &str, matcher: &TermMatcher) -> Rewrite {
    let tokens = tokenize(text);
    let ranges: Vec<(usize, usize)> = matcher
        .find_all(&tokens)
        .into_iter()
        .map(|m| (m.first_token, m.last_token))
        .collect();
    delete_ranges(&tokens, &ranges)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CasePattern {
    Lower,
    Capitalized,
    Upper,
    Mixed,
}

fn is_cased(c: char) -> bool {
    c.is_lowercase() || c.is_uppercase()
}

fn case_pattern(surface: &str) -> CasePattern {
    let cased: Vec<char> = surface.chars().filter(|c| is_cased(*c)).collect();
    match cased.as_slice() {
        [] => CasePattern::Lower,
        _ if cased.iter().all(|c| c.is_lowercase()) => CasePattern::Lower,
        [_, _, ..] if cased.iter().all(|c| c.is_uppercase()) => CasePattern::Upper,
        [first, rest @ ..] if first.is_uppercase() && rest.iter().all(|c| c.is_lowercase()) => {
            CasePattern::Capitalized
        }
        _ => CasePattern::Mixed,
    }
}

fn apply_case(pattern: CasePattern, term: &str) -> String {
    match pattern {
        CasePattern::Lower | CasePattern::Mixed => term.to_owned(),
        CasePattern::Upper => term.to_uppercase(),
        CasePattern::Capitalized => {
            let mut out = String::with_capacity(term.len());
            let mut done = false;
            for c in term.chars() {
                if !done && is_cased(c) {
                    out.extend(c.to_uppercase());
                    done = true;
                } else {
                    out.push(c);
                }
            }
            out
        }
    }
}

/// Picks the replacement surface for a matched term, or `None` if the match is left alone.
///
/// In exact mode a replacement is only made when swapping it back would reproduce the
/// matched surface exactly; odd capitalisations such as "pIlot" are left untouched.
fn swap_surface(surface: &str, term: &str, partner: &str, robust: bool) -> Option<String> {
    let pattern = case_pattern(surface);
    if robust {
        return Some(apply_case(pattern, partner));
    }
    if pattern == CasePattern::Mixed {
        return None;
    }
    let replacement = apply_case(pattern, partner);
    let reversible = replacement.to_lowercase() == partner
        && apply_case(case_pattern(&replacement), term) == surface;
    reversible.then_some(replacement)
}

pub(crate) fn lexicon_swap_with(text: &str, pairs: &SwapMap, matcher: &TermMatcher, robust: bool) -> Rewrite {
    let tokens = tokenize(text);
    let mut output = String::new();
    let mut edits = Vec::new();
    let mut cursor = 0;
    for m in matcher.find_all(&tokens) {
        let surface = joined(&tokens[m.first_token..=m.last_token]);
        let term = matcher.term(m.term);
        let Some(partner) = pairs.partner(term) else {
            continue;
        };
        let Some(replacement) = swap_surface(&surface, term, partner, robust) else {
            continue;
        };
        output.push_str(&joined(&tokens[cursor..m.first_token]));
        output.push_str(&replacement);
        edits.push(Edit {
            start: tokens[m.first_token].span.start,
            end: tokens[m.last_token].span.end,
            original: surface,
            replacement,
        });
        cursor = m.last_token + 1;
    }
    output.push_str(&joined(&tokens[cursor..]));
    Rewrite { output, edits }
}
