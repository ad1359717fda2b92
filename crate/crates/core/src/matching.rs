//! Whole-word phrase matching.
//!
//! Scans left to right. At each position the longest pattern that matches
//! wins and consumes its span; scanning resumes after it. A match only counts
//! when both of its ends sit on a word boundary, i.e. the characters on either
//! side of the edge differ in word class (see [`is_word_char`]) or the edge is
//! the start/end of the text. So `John` never matches inside `Johnson`.

use crate::corpus::words::is_word_char;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhraseMatch {
    /// Byte offsets into the scanned text.
    pub start: usize,
    pub end: usize,
    /// Index of the matched pattern in the order given to [`PhraseMatcher::new`].
    pub pattern: usize,
}

#[derive(Debug, Clone)]
pub struct PhraseMatcher {
    patterns: Vec<Vec<char>>,
    /// Pattern indices, longest first; ties keep insertion order.
    by_length: Vec<usize>,
    case_sensitive: bool,
}

fn chars_eq(a: char, b: char, case_sensitive: bool) -> bool {
    a == b || (!case_sensitive && a.to_lowercase().eq(b.to_lowercase()))
}

fn boundary(chars: &[char], at: usize) -> bool {
    if at == 0 || at == chars.len() {
        return true;
    }
    is_word_char(chars[at - 1]) != is_word_char(chars[at])
}

impl PhraseMatcher {
    /// Empty patterns are ignored.
    pub fn new<I, S>(patterns: I, case_sensitive: bool) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let patterns: Vec<Vec<char>> = patterns.into_iter().map(|p| p.as_ref().chars().collect()).collect();
        let mut by_length: Vec<usize> = (0..patterns.len()).filter(|&i| !patterns[i].is_empty()).collect();
        by_length.sort_by(|&a, &b| patterns[b].len().cmp(&patterns[a].len()));
        PhraseMatcher {
            patterns,
            by_length,
            case_sensitive,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.by_length.is_empty()
    }

    fn matches_at(&self, chars: &[char], at: usize, pattern: &[char]) -> bool {
        let end = at + pattern.len();
        end <= chars.len()
            && chars[at..end]
                .iter()
                .zip(pattern)
                .all(|(&a, &b)| chars_eq(a, b, self.case_sensitive))
            && boundary(chars, end)
    }

    /// All non-overlapping whole-word matches, in text order.
    pub fn find_all(&self, text: &str) -> Vec<PhraseMatch> {
        if self.is_empty() || text.is_empty() {
            return Vec::new();
        }
        let chars: Vec<char> = text.chars().collect();
        let mut offsets: Vec<usize> = text.char_indices().map(|(i, _)| i).collect();
        offsets.push(text.len());

        let mut found = Vec::new();
        let mut at = 0;
        while at < chars.len() {
            let hit = if boundary(&chars, at) {
                self.by_length
                    .iter()
                    .copied()
                    .find(|&p| self.matches_at(&chars, at, &self.patterns[p]))
            } else {
                None
            };
            match hit {
                Some(p) => {
                    let end = at + self.patterns[p].len();
                    found.push(PhraseMatch {
                        start: offsets[at],
                        end: offsets[end],
                        pattern: p,
                    });
                    at = end;
                }
                None => at += 1,
            }
        }
        found
    }

    pub fn count(&self, text: &str) -> usize {
        self.find_all(text).len()
    }

    /// Rewrites `text`, substituting each match with `replacement(pattern_index)`.
    pub fn replace_all<'r, F>(&self, text: &str, mut replacement: F) -> (String, Vec<PhraseMatch>)
    where
        F: FnMut(usize) -> &'r str,
    {
        let found = self.find_all(text);
        if found.is_empty() {
            return (text.to_string(), found);
        }
        let mut out = String::with_capacity(text.len());
        let mut last = 0;
        for m in &found {
            out.push_str(&text[last..m.start]);
            out.push_str(replacement(m.pattern));
            last = m.end;
        }
        out.push_str(&text[last..]);
        (out, found)
    }
}
