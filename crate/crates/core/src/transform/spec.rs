use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};

use serde::{Deserialize, Serialize};

use super::lexicon::{canonical_term, Lexicon, PosTag, SwapMap};
use super::matcher::TermMatcher;
use super::ops::{
    lexicon_remove_with, lexicon_swap_with, pos_remove_with, stopword_remove_with, Rewrite,
    TransformResult,
};
use super::tag::LexiconTagger;
use super::trace::TraceRecord;
use crate::error::{Error, Result};

/// Which manipulation to run, together with the word lists it needs.
///
/// Lists are embedded rather than referenced so a stored spec is enough to re-derive
/// every delivered variant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransformKind {
    Identity,
    PosRemove {
        tags: BTreeSet<PosTag>,
        lexicon: Lexicon,
    },
    StopwordRemove {
        stopwords: BTreeSet<String>,
    },
    LexiconRemove {
        terms: Vec<String>,
    },
    LexiconSwap {
        pairs: SwapMap,
    },
}

impl TransformKind {
    pub fn name(&self) -> &'static str {
        match self {
            TransformKind::Identity => "identity",
            TransformKind::PosRemove { .. } => "pos_remove",
            TransformKind::StopwordRemove { .. } => "stopword_remove",
            TransformKind::LexiconRemove { .. } => "lexicon_remove",
            TransformKind::LexiconSwap { .. } => "lexicon_swap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformSpec {
    #[serde(flatten)]
    pub kind: TransformKind,
    #[serde(default)]
    pub robust_matching: bool,
}

impl Default for TransformSpec {
    fn default() -> Self {
        Self::identity()
    }
}

impl TransformSpec {
    pub fn identity() -> Self {
        Self {
            kind: TransformKind::Identity,
            robust_matching: false,
        }
    }

    pub fn pos_remove(tags: impl IntoIterator<Item = PosTag>, lexicon: Lexicon) -> Result<Self> {
        Self::validated(TransformKind::PosRemove {
            tags: tags.into_iter().collect(),
            lexicon,
        })
    }

    pub fn stopword_remove<S: AsRef<str>>(stopwords: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::validated(TransformKind::StopwordRemove {
            stopwords: stopwords
                .into_iter()
                .map(|w| w.as_ref().to_lowercase())
                .collect(),
        })
    }

    pub fn lexicon_remove<S: AsRef<str>>(terms: impl IntoIterator<Item = S>) -> Result<Self> {
        let terms = terms
            .into_iter()
            .map(|t| canonical_term(t.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::validated(TransformKind::LexiconRemove { terms })
    }

    pub fn lexicon_swap(pairs: SwapMap) -> Self {
        Self {
            kind: TransformKind::LexiconSwap { pairs },
            robust_matching: false,
        }
    }

    pub fn with_robust_matching(mut self, robust: bool) -> Self {
        self.robust_matching = robust;
        self
    }

    fn validated(kind: TransformKind) -> Result<Self> {
        let spec = Self {
            kind,
            robust_matching: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, TransformKind::Identity)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            TransformKind::Identity | TransformKind::LexiconSwap { .. } => Ok(()),
            TransformKind::PosRemove { tags, lexicon } => {
                if tags.is_empty() {
                    return Err(Error::validation("pos_remove needs at least one tag"));
                }
                lexicon.validate()
            }
            TransformKind::StopwordRemove { stopwords } => {
                if stopwords.is_empty() {
                    return Err(Error::validation("stopword_remove needs a non-empty stopword set"));
                }
                match stopwords.iter().find(|w| w.to_lowercase() != **w || w.contains(' ')) {
                    Some(bad) => Err(Error::validation(format!("bad stopword {bad:?}"))),
                    None => Ok(()),
                }
            }
            TransformKind::LexiconRemove { terms } => {
                if terms.is_empty() {
                    return Err(Error::validation("lexicon_remove needs at least one term"));
                }
                for term in terms {
                    if canonical_term(term)? != *term {
                        return Err(Error::validation(format!("term {term:?} is not canonical")));
                    }
                }
                Ok(())
            }
        }
    }

    /// Short human-readable description stored in every trace.
    pub fn summary(&self) -> String {
        let body = match &self.kind {
            TransformKind::Identity => "identity".to_owned(),
            TransformKind::PosRemove { tags, lexicon } => format!(
                "pos_remove(tags={}; lexicon={} entries)",
                tags.iter().map(|t| t.as_str()).collect::<Vec<_>>().join(","),
                lexicon.entries.len()
            ),
            TransformKind::StopwordRemove { stopwords } => {
                format!("stopword_remove({} words)", stopwords.len())
            }
            TransformKind::LexiconRemove { terms } => format!("lexicon_remove({})", terms.join("|")),
            TransformKind::LexiconSwap { pairs } => format!(
                "lexicon_swap({})",
                pairs
                    .pairs()
                    .iter()
                    .map(|(a, b)| format!("{a}<->{b}"))
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        };
        if self.robust_matching {
            format!("{body} +robust")
        } else {
            body
        }
    }

    fn rewrite(&self, text: &str) -> Rewrite {
        let robust = self.robust_matching;
        match &self.kind {
            TransformKind::Identity => Rewrite {
                output: text.to_owned(),
                edits: Vec::new(),
            },
            TransformKind::PosRemove { tags, lexicon } => {
                pos_remove_with(text, tags, &LexiconTagger::new(lexicon).robust(robust))
            }
            TransformKind::StopwordRemove { stopwords } => {
                stopword_remove_with(text, stopwords, robust)
            }
            TransformKind::LexiconRemove { terms } => {
                lexicon_remove_with(text, &TermMatcher::new(terms, robust))
            }
            TransformKind::LexiconSwap { pairs } => {
                lexicon_swap_with(text, pairs, &TermMatcher::new(pairs.terms(), robust), robust)
            }
        }
    }
}

/// Runs `spec` over `text`.
///
/// Never fails: an invalid spec, a panic inside a transform, or an output that its own
/// trace cannot reproduce all yield the input unchanged with `trace.failed` set.
pub fn apply_transform(spec: &TransformSpec, text: &str) -> TransformResult {
    let summary = spec.summary();
    if let Err(err) = spec.validate() {
        return failed(text, format!("{summary} [invalid: {err}]"));
    }
    match catch_unwind(AssertUnwindSafe(|| spec.rewrite(text))) {
        Ok(rewrite) => {
            let result = rewrite.into_result(summary);
            match result.trace.replay(text) {
                Ok(replayed) if replayed == result.output => result,
                _ => failed(text, format!("{} [trace mismatch]", result.trace.spec)),
            }
        }
        Err(_) => failed(text, format!("{summary} [panicked]")),
    }
}

fn failed(text: &str, spec: String) -> TransformResult {
    let mut trace = TraceRecord::new(spec, Vec::new());
    trace.failed = true;
    TransformResult {
        output: text.to_owned(),
        trace,
    }
}

/// Deletes tagged words whose tag is in `tags`. Words the tagger does not know are kept.
pub fn pos_remove(text: &str, tags: &BTreeSet<PosTag>, lexicon: &Lexicon) -> Result<TransformResult> {
    let spec = TransformSpec::pos_remove(tags.iter().copied(), lexicon.clone())?;
    Ok(pos_remove_with(text, tags, &LexiconTagger::new(lexicon)).into_result(spec.summary()))
}

pub fn stopword_remove(text: &str, stopwords: &BTreeSet<String>) -> Result<TransformResult> {
    let spec = TransformSpec::stopword_remove(stopwords)?;
    let TransformKind::StopwordRemove { stopwords } = &spec.kind else {
        unreachable!()
    };
    Ok(stopword_remove_with(text, stopwords, false).into_result(spec.summary()))
}

pub fn lexicon_remove<S: AsRef<str>>(text: &str, terms: &[S]) -> Result<TransformResult> {
    let spec = TransformSpec::lexicon_remove(terms)?;
    let TransformKind::LexiconRemove { terms } = &spec.kind else {
        unreachable!()
    };
    Ok(lexicon_remove_with(text, &TermMatcher::new(terms, false)).into_result(spec.summary()))
}

pub fn lexicon_swap(text: &str, pairs: &SwapMap) -> TransformResult {
    let matcher = TermMatcher::new(pairs.terms(), false);
    lexicon_swap_with(text, pairs, &matcher, false)
        .into_result(TransformSpec::lexicon_swap(pairs.clone()).summary())
}
