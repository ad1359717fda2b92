use std::io::Write;

use serde::Serialize;

use super::{PreprocessError, Roster};
use crate::corpus::Transcript;
use crate::matching::PhraseMatcher;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeidOptions {
    pub case_sensitive: bool,
    pub deidentify_speaker_column: bool,
}

impl Default for DeidOptions {
    fn default() -> Self {
        DeidOptions {
            case_sensitive: false,
            deidentify_speaker_column: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Speaker,
    Text,
}

/// One substitution, with byte offsets into the original cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Replacement {
    pub row_index: usize,
    pub field: Field,
    pub span_start: usize,
    pub span_end: usize,
    pub matched_variant: String,
    pub replacement: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DeidReport {
    pub replacements: Vec<Replacement>,
}

impl DeidReport {
    pub fn total_count(&self) -> usize {
        self.replacements.len()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), PreprocessError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["row_index", "field", "span_start", "span_end", "variant", "replacement"])?;
        for r in &self.replacements {
            let field = match r.field {
                Field::Speaker => "speaker",
                Field::Text => "text",
            };
            w.write_record([
                r.row_index.to_string().as_str(),
                field,
                r.span_start.to_string().as_str(),
                r.span_end.to_string().as_str(),
                r.matched_variant.as_str(),
                r.replacement.as_str(),
            ])?;
        }
        w.flush().map_err(|e| PreprocessError::Csv(e.into()))?;
        Ok(())
    }
}

/// Flattened roster: variant `i` belongs to `owners[i]`.
struct RosterIndex<'a> {
    roster: &'a Roster,
    variants: Vec<&'a str>,
    owners: Vec<usize>,
    matcher: PhraseMatcher,
}

impl<'a> RosterIndex<'a> {
    fn new(roster: &'a Roster, case_sensitive: bool) -> Self {
        let mut variants = Vec::new();
        let mut owners = Vec::new();
        for (i, entry) in roster.entries.iter().enumerate() {
            for v in &entry.name_variants {
                variants.push(v.as_str());
                owners.push(i);
            }
        }
        let matcher = PhraseMatcher::new(&variants, case_sensitive);
        RosterIndex {
            roster,
            variants,
            owners,
            matcher,
        }
    }

    fn rewrite(&self, row_index: usize, field: Field, text: &str, log: &mut Vec<Replacement>) -> String {
        let (out, found) = self
            .matcher
            .replace_all(text, |p| self.roster.entries[self.owners[p]].replacement.as_str());
        log.extend(found.into_iter().map(|m| Replacement {
            row_index,
            field,
            span_start: m.start,
            span_end: m.end,
            matched_variant: self.variants[m.pattern].to_string(),
            replacement: self.roster.entries[self.owners[m.pattern]].replacement.clone(),
        }));
        out
    }
}

/// Replaces every whole-word roster name in the text (and optionally the
/// speaker labels) with the owning entry's replacement.
pub fn deidentify(transcript: &Transcript, roster: &Roster, options: DeidOptions) -> (Transcript, DeidReport) {
    for w in roster.warnings() {
        log::warn!("{}: {w}", transcript.source_id());
    }
    let index = RosterIndex::new(roster, options.case_sensitive);
    let mut replacements = Vec::new();
    let utterances = transcript
        .utterances()
        .iter()
        .map(|u| {
            let mut u = u.clone();
            if options.deidentify_speaker_column {
                u.speaker = index.rewrite(u.row_index, Field::Speaker, &u.speaker, &mut replacements);
            }
            u.text = index.rewrite(u.row_index, Field::Text, &u.text, &mut replacements);
            u
        })
        .collect();
    (transcript.with_utterances(utterances), DeidReport { replacements })
}
