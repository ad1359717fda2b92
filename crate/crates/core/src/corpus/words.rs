//! Word segmentation shared by gating, talk time, n-grams and phrase matching.
//!
//! A word is a maximal run of Unicode letters and digits. An apostrophe that
//! sits between two such characters (`don't`, `O’Neil`) joins the run; any
//! other apostrophe is punctuation. Boundary checks for phrase matching only
//! look at the letter/digit class, so `John's` still exposes `John` as a
//! whole word.

/// Letter/digit class used for word boundaries.
#[inline]
pub fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

#[inline]
fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}')
}

/// Byte spans `(start, end)` of every word in `text`, in order.
pub fn word_spans(text: &str) -> WordSpans<'_> {
    WordSpans { text, pos: 0 }
}

/// Iterator returned by [`word_spans`].
#[derive(Debug, Clone)]
pub struct WordSpans<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Iterator for WordSpans<'a> {
    type Item = (usize, usize);

    fn next(&mut self) -> Option<Self::Item> {
        let rest = &self.text[self.pos..];
        let (offset, _) = rest.char_indices().find(|&(_, c)| is_word_char(c))?;
        let start = self.pos + offset;
        let mut end = start;
        let mut chars = self.text[start..].char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            if is_word_char(c) {
                end = start + i + c.len_utf8();
            } else if is_apostrophe(c) {
                match chars.peek() {
                    Some(&(_, next)) if is_word_char(next) => continue,
                    _ => break,
                }
            } else {
                break;
            }
        }
        self.pos = end;
        Some((start, end))
    }
}

/// Number of words in `text`.
pub fn word_count(text: &str) -> usize {
    word_spans(text).count()
}

/// Lowercased word tokens of `text`.
pub fn tokens(text: &str) -> Vec<String> {
    word_spans(text).map(|(s, e)| text[s..e].to_lowercase()).collect()
}
