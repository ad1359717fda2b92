//! Corpus analyses. Each produces an [`AnalysisReport`] that [`render`] turns
//! into a terminal table, a prose summary, or a plot-data document.

mod lexical;
mod plot;
mod qualitative;
mod quantitative;
mod render;
mod temporal;

use serde::Serialize;

use crate::annotate::{builtin_feature, Backend};
use crate::corpus::{Transcript, Value, ValueDomain};

pub use lexical::{
    log_odds, log_odds_report, log_odds_with, ngram_counts, ngram_counts_with, ngram_frequency_report, ngrams,
    LogOddsEntry, LogOddsResult, NgramCounts, NgramTable, Prior, SpeakerGroup,
};
pub use plot::{PlotDocument, PlotSeries};
pub use qualitative::{qualitative_examples, ContextLine, ContextWindow, Example};
pub use quantitative::{quantitative_summary, quantitative_summary_with, QuantRow};
pub use render::{render, RenderMode, Rendered};
pub use temporal::{
    bin_edges, temporal_profile, temporal_profile_corpus, temporal_profile_corpus_with, BinSpec, TemporalSeries,
};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error(
        "feature `{feature}` is not annotated in `{source_id}`; run `classtalk annotate --features {feature}` first"
    )]
    MissingFeature { feature: String, source_id: String },
    #[error("`{source_id}` row {row_index}: `{value}` is not a valid value for `{feature}`")]
    BadValue {
        feature: String,
        source_id: String,
        row_index: usize,
        value: String,
    },
    #[error("percentage undefined: the total of `{0}` is zero")]
    ZeroTotal(String),
    #[error("n-gram `{0}` is missing from the background counts")]
    MissingBackground(String),
    #[error("{0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Qualitative,
    Quantitative,
    Lexical,
    Temporal,
}

impl ReportKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReportKind::Qualitative => "qualitative",
            ReportKind::Quantitative => "quantitative",
            ReportKind::Lexical => "lexical",
            ReportKind::Temporal => "temporal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupBy {
    #[default]
    None,
    Speaker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Representation {
    #[default]
    Raw,
    Percentage,
    Mean,
}

impl Representation {
    pub fn as_str(self) -> &'static str {
        match self {
            Representation::Raw => "raw",
            Representation::Percentage => "percentage",
            Representation::Mean => "mean",
        }
    }
}

/// How a feature's values are aggregated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureKind {
    /// Summed.
    Numeric,
    /// Counted per label.
    Labels(Vec<i64>),
}

/// Declared domain if typed; otherwise classifier features count labels and
/// everything else is numeric.
pub fn feature_kind(corpus: &[Transcript], feature: &str) -> FeatureKind {
    let declared = corpus.iter().find_map(|t| match t.domain(feature) {
        Some(ValueDomain::Numeric) => Some(FeatureKind::Numeric),
        Some(ValueDomain::Labels(l)) => Some(FeatureKind::Labels(l.clone())),
        _ => None,
    });
    declared.unwrap_or_else(|| match builtin_feature(feature) {
        Some(spec) if spec.backend == Backend::Classifier => match spec.value_domain {
            ValueDomain::Labels(l) => FeatureKind::Labels(l),
            _ => FeatureKind::Numeric,
        },
        _ => FeatureKind::Numeric,
    })
}

pub(crate) fn require_feature(corpus: &[Transcript], feature: &str) -> Result<(), AnalysisError> {
    match corpus.iter().find(|t| !t.has_feature(feature)) {
        Some(t) => Err(AnalysisError::MissingFeature {
            feature: feature.to_string(),
            source_id: t.source_id().to_string(),
        }),
        None => Ok(()),
    }
}

/// Label name for built-in classifier features.
pub fn label_display(feature: &str, label: i64) -> String {
    match builtin_feature(feature).as_ref().and_then(|s| s.label_name(label)) {
        Some(name) => format!("{label}: {name}"),
        None => label.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReportBody {
    Qualitative(Vec<Example>),
    Quantitative(Vec<QuantRow>),
    NgramFrequencies(Vec<NgramTable>),
    LogOdds {
        group_a: String,
        group_b: String,
        result: LogOddsResult,
    },
    Temporal {
        num_bins: usize,
        /// Row ranges for a single transcript; empty for corpus profiles,
        /// whose bins are relative positions.
        edges: Vec<(usize, usize)>,
        series: Vec<TemporalSeries>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub kind: ReportKind,
    pub title: String,
    pub feature: Option<String>,
    pub representation: Option<Representation>,
    pub groups: Vec<String>,
    pub x_label: String,
    pub y_label: String,
    pub body: ReportBody,
}

/// `Int(1)` and `Float(1.0)` compare equal; other values compare exactly.
pub(crate) fn values_match(a: &Value, b: &Value) -> bool {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) => x == y,
        _ => a == b,
    }
}
