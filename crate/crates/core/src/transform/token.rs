use std::ops::Range;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Word,
    Punctuation,
    Whitespace,
}

/// A slice of the source text. `span` is measured in code points, not bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub span: Range<usize>,
    pub kind: TokenKind,
}

impl Token {
    pub fn is_word(&self) -> bool {
        self.kind == TokenKind::Word
    }
}

pub(crate) fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '\u{2019}'
}

fn classify(c: char) -> TokenKind {
    if is_word_char(c) {
        TokenKind::Word
    } else if c.is_whitespace() {
        TokenKind::Whitespace
    } else {
        TokenKind::Punctuation
    }
}

/// Splits `text` into words (maximal runs of letters, digits and apostrophes), maximal
/// whitespace runs, and single punctuation characters.
///
/// Concatenating the token texts in order always reproduces `text`.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens: Vec<Token> = Vec::new();
    for (pos, c) in text.chars().enumerate() {
        let kind = classify(c);
        match tokens.last_mut() {
            Some(last) if last.kind == kind && kind != TokenKind::Punctuation => {
                last.text.push(c);
                last.span.end = pos + 1;
            }
            _ => tokens.push(Token {
                text: c.to_string(),
                span: pos..pos + 1,
                kind,
            }),
        }
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.text.as_str()).collect()
    }

    #[test]
    fn splits_words_spaces_and_punctuation() {
        let tokens = tokenize("save the doctor!");
        assert_eq!(texts(&tokens), ["save", " ", "the", " ", "doctor", "!"]);
        assert_eq!(tokens[4].span, 9..15);
        assert_eq!(tokens[5].kind, TokenKind::Punctuation);
    }

    #[test]
    fn empty_input_has_no_tokens() {
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn apostrophe_stays_inside_word() {
        let tokens = tokenize("pilot's wife");
        assert_eq!(texts(&tokens), ["pilot's", " ", "wife"]);
        assert!(tokens[0].is_word());
    }

    #[test]
    fn spans_count_code_points() {
        let tokens = tokenize("café, ok");
        assert_eq!(tokens[0].span, 0..4);
        assert_eq!(tokens[1].span, 4..5);
        assert_eq!(tokens[3].span, 6..8);
    }

    #[test]
    fn digits_join_words_and_punctuation_is_per_char() {
        assert_eq!(texts(&tokenize("p1lot?!")), ["p1lot", "?", "!"]);
        assert_eq!(texts(&tokenize("a \t\nb")), ["a", " \t\n", "b"]);
    }
}
