use serde::Serialize;

use super::{require_feature, values_match, AnalysisError, AnalysisReport, ReportBody, ReportKind};
use crate::corpus::{Transcript, Utterance, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ContextWindow {
    pub before: usize,
    pub after: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContextLine {
    pub row_index: usize,
    pub speaker: String,
    pub text: String,
}

impl From<&Utterance> for ContextLine {
    fn from(u: &Utterance) -> Self {
        ContextLine {
            row_index: u.row_index,
            speaker: u.speaker.clone(),
            text: u.text.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub source_id: String,
    pub row_index: usize,
    pub speaker: String,
    pub text: String,
    pub value: Value,
    pub before: Vec<ContextLine>,
    pub after: Vec<ContextLine>,
}

/// Rows whose `feature` equals `target`, in transcript then row order, with
/// surrounding lines clamped to the same transcript.
pub fn qualitative_examples(
    corpus: &[Transcript],
    feature: &str,
    target: &Value,
    max_examples: usize,
    context: ContextWindow,
) -> Result<AnalysisReport, AnalysisError> {
    require_feature(corpus, feature)?;
    let mut examples = Vec::new();
    'outer: for t in corpus {
        let rows = t.utterances();
        for (i, u) in rows.iter().enumerate() {
            if examples.len() >= max_examples {
                break 'outer;
            }
            let value = u.get(feature);
            if !values_match(value, target) {
                continue;
            }
            let lo = i.saturating_sub(context.before);
            let hi = (i + 1 + context.after).min(rows.len());
            examples.push(Example {
                source_id: t.source_id().to_string(),
                row_index: u.row_index,
                speaker: u.speaker.clone(),
                text: u.text.clone(),
                value: value.clone(),
                before: rows[lo..i].iter().map(ContextLine::from).collect(),
                after: rows[i + 1..hi].iter().map(ContextLine::from).collect(),
            });
        }
    }
    Ok(AnalysisReport {
        kind: ReportKind::Qualitative,
        title: format!("{feature} = {target}"),
        feature: Some(feature.to_string()),
        representation: None,
        groups: corpus.iter().map(|t| t.source_id().to_string()).collect(),
        x_label: "row".into(),
        y_label: feature.to_string(),
        body: ReportBody::Qualitative(examples),
    })
}
