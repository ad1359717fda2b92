//! Transcript clean-up before annotation: name replacement, merging of
//! consecutive same-speaker turns, and whitespace/capitalization fixes.

mod deid;
mod roster;

use std::path::PathBuf;

use crate::corpus::{Transcript, Utterance, Value};

pub use deid::{deidentify, DeidOptions, DeidReport, Field, Replacement};
pub use roster::{Roster, RosterEntry};

#[derive(Debug, thiserror::Error)]
pub enum PreprocessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("roster: {0}")]
    RosterParse(#[source] serde_json::Error),
    #[error("invalid roster: {0}")]
    InvalidRoster(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub const DEFAULT_SEPARATOR: &str = " ";

/// Collapses each run of consecutive utterances by the same speaker into
/// one. Merged rows lose their annotations (set to null); single rows keep
/// theirs.
pub fn merge_consecutive(transcript: &Transcript, separator: &str) -> Transcript {
    let mut merged: Vec<Utterance> = Vec::with_capacity(transcript.len());
    let mut run_len = 0usize;
    for u in transcript.utterances() {
        match merged.last_mut() {
            Some(last) if last.speaker == u.speaker => {
                last.text.push_str(separator);
                last.text.push_str(&u.text);
                last.end_time = u.end_time;
                run_len += 1;
                if run_len == 2 {
                    for v in last.annotations.values_mut() {
                        *v = Value::Null;
                    }
                }
            }
            _ => {
                merged.push(u.clone());
                run_len = 1;
            }
        }
    }
    transcript.with_utterances(merged)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NormalizeOptions {
    pub strip_whitespace: bool,
    pub collapse_internal_spaces: bool,
    pub capitalize_sentence_start: bool,
}

impl NormalizeOptions {
    pub fn all() -> Self {
        NormalizeOptions {
            strip_whitespace: true,
            collapse_internal_spaces: true,
            capitalize_sentence_start: true,
        }
    }
}

fn collapse_spaces(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_space = false;
    for c in text.chars() {
        if c.is_whitespace() {
            if !in_space {
                out.push(' ');
            }
            in_space = true;
        } else {
            out.push(c);
            in_space = false;
        }
    }
    out
}

/// Uppercases the first letter of the text and of every sentence that
/// follows `.`, `?` or `!` plus whitespace.
fn capitalize_sentences(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut at_start = true;
    let mut after_terminator = false;
    for c in text.chars() {
        if c.is_whitespace() {
            if after_terminator {
                at_start = true;
            }
            out.push(c);
            continue;
        }
        if at_start && c.is_alphabetic() {
            out.extend(c.to_uppercase());
        } else {
            out.push(c);
        }
        at_start = false;
        after_terminator = matches!(c, '.' | '?' | '!');
    }
    out
}

pub fn normalize_text_str(text: &str, options: NormalizeOptions) -> String {
    let mut s = text.to_string();
    if options.strip_whitespace {
        s = s.trim().to_string();
    }
    if options.collapse_internal_spaces {
        s = collapse_spaces(&s);
    }
    if options.capitalize_sentence_start {
        s = capitalize_sentences(&s);
    }
    s
}

pub fn normalize_text(transcript: &Transcript, options: NormalizeOptions) -> Transcript {
    let utterances = transcript
        .utterances()
        .iter()
        .map(|u| Utterance {
            text: normalize_text_str(&u.text, options),
            ..u.clone()
        })
        .collect();
    transcript.with_utterances(utterances)
}
