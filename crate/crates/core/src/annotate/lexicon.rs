use std::collections::BTreeSet;
use std::path::Path;

use super::AnnotateError;

/// Domain vocabulary for density counts. Terms are lowercase with single
/// internal spaces; multi-word terms are allowed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    pub terms: BTreeSet<String>,
    pub source_path: String,
}

pub(crate) fn normalize_term(term: &str) -> String {
    term.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Collapses whitespace runs so multi-word terms match across odd spacing.
pub(crate) fn normalize_spacing(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl Lexicon {
    pub fn new<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Lexicon {
            terms: terms
                .into_iter()
                .map(|t| normalize_term(t.as_ref()))
                .filter(|t| !t.is_empty())
                .collect(),
            source_path: String::new(),
        }
    }

    /// One term per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Self {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: &Path) -> Result<Self, AnnotateError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| AnnotateError::Config(format!("{}: {e}", path.display())))?;
        let mut lexicon = Self::parse(&text);
        lexicon.source_path = path.display().to_string();
        Ok(lexicon)
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }
}
