//! Transcript data model.
//!
//! A [`Transcript`] is an ordered table of utterances. The speaker and text
//! columns (and optionally start/end times) are named by a [`ColumnMapping`];
//! every other column is carried as an annotation so nothing from the source
//! file is dropped.

mod io;
pub mod words;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

pub use io::{
    corpus_files, load_corpus_dir, load_transcript, read_csv, read_json, save_transcript, write_csv, write_json, Format,
};
pub use words::{tokens, word_count, word_spans};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing column `{column}`")]
    MissingColumn { column: String },
    #[error("row {row_index}: cannot parse `{value}` in column `{column}` as seconds")]
    InvalidTime {
        row_index: usize,
        column: String,
        value: String,
    },
    #[error("row {row_index}: end time {end} is before start time {start}")]
    TimeOrder { row_index: usize, start: f64, end: f64 },
    #[error("row {row_index}: column `{column}` holds a nested value")]
    NestedValue { row_index: usize, column: String },
    #[error("invalid column mapping: {0}")]
    Mapping(String),
    #[error("feature `{name}` has {got} values for {expected} utterances")]
    FeatureLength { name: String, expected: usize, got: usize },
    #[error("unknown file format `{0}` (expected csv or json)")]
    UnknownFormat(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("json: expected a top-level array of objects")]
    NotAnArray,
}

/// A single annotation cell.
///
/// Non-finite floats are never stored; [`Value::float`] maps them to `Null`.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Value {
    #[default]
    Null,
    Int(i64),
    Float(f64),
    Text(String),
}

impl Value {
    pub fn float(v: f64) -> Self {
        if !v.is_finite() {
            Value::Null
        } else {
            Value::Float(v)
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            _ => None,
        }
    }

    /// Integer label, accepting integral floats (`1.0`) from foreign files.
    pub fn as_label(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            Value::Float(f) if f.fract() == 0.0 && f.is_finite() => Some(*f as i64),
            _ => None,
        }
    }

    /// Parses a raw cell. Empty is null; integers and finite floats are
    /// recognised; anything else (including `nan`/`inf`) is kept as text.
    pub fn parse_cell(raw: &str) -> Self {
        if raw.is_empty() {
            return Value::Null;
        }
        if let Ok(i) = raw.parse::<i64>() {
            return Value::Int(i);
        }
        match raw.parse::<f64>() {
            Ok(f) if f.is_finite() => Value::Float(f),
            _ => Value::Text(raw.to_string()),
        }
    }

    /// Cell text as written to CSV. Floats always carry a fractional part or
    /// exponent so they reload as floats.
    pub fn to_cell(&self) -> String {
        match self {
            Value::Null => String::new(),
            Value::Int(i) => i.to_string(),
            Value::Float(f) if f.is_finite() => format!("{f:?}"),
            Value::Float(_) => String::new(),
            Value::Text(s) => s.clone(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("null"),
            other => f.write_str(&other.to_cell()),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::float(v)
    }
}

/// What an annotation column may hold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueDomain {
    Numeric,
    /// Integer class labels.
    Labels(Vec<i64>),
    /// Pass-through column from the source file; type not declared.
    Untyped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub speaker_column: String,
    pub text_column: String,
    #[serde(default)]
    pub start_time_column: Option<String>,
    #[serde(default)]
    pub end_time_column: Option<String>,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        ColumnMapping {
            speaker_column: "speaker".into(),
            text_column: "text".into(),
            start_time_column: None,
            end_time_column: None,
        }
    }
}

impl ColumnMapping {
    pub fn new(speaker: impl Into<String>, text: impl Into<String>) -> Self {
        ColumnMapping {
            speaker_column: speaker.into(),
            text_column: text.into(),
            start_time_column: None,
            end_time_column: None,
        }
    }

    pub fn with_times(mut self, start: impl Into<String>, end: impl Into<String>) -> Self {
        self.start_time_column = Some(start.into());
        self.end_time_column = Some(end.into());
        self
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut names = vec![&self.speaker_column, &self.text_column];
        names.extend(self.start_time_column.iter());
        names.extend(self.end_time_column.iter());
        for (i, a) in names.iter().enumerate() {
            if a.is_empty() {
                return Err(CorpusError::Mapping("column names must be non-empty".into()));
            }
            if names[..i].contains(a) {
                return Err(CorpusError::Mapping(format!("column `{a}` mapped twice")));
            }
        }
        Ok(())
    }

    pub(crate) fn mapped_columns(&self) -> Vec<&str> {
        let mut cols = vec![self.speaker_column.as_str(), self.text_column.as_str()];
        cols.extend(self.start_time_column.as_deref());
        cols.extend(self.end_time_column.as_deref());
        cols
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Utterance {
    pub row_index: usize,
    pub speaker: String,
    pub text: String,
    pub start_time: Option<f64>,
    pub end_time: Option<f64>,
    pub annotations: BTreeMap<String, Value>,
}

impl Utterance {
    pub fn new(speaker: impl Into<String>, text: impl Into<String>) -> Self {
        Utterance {
            speaker: speaker.into(),
            text: text.into(),
            ..Default::default()
        }
    }

    pub fn with_times(mut self, start: f64, end: f64) -> Self {
        self.start_time = Some(start);
        self.end_time = Some(end);
        self
    }

    pub fn with_annotation(mut self, name: impl Into<String>, value: impl Into<Value>) -> Self {
        self.annotations.insert(name.into(), value.into());
        self
    }

    pub fn word_count(&self) -> usize {
        word_count(&self.text)
    }

    /// Annotation value, or `Null` when the feature is absent.
    pub fn get(&self, feature: &str) -> &Value {
        static NULL: Value = Value::Null;
        self.annotations.get(feature).unwrap_or(&NULL)
    }
}

/// An ordered conversation.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    source_id: String,
    mapping: ColumnMapping,
    /// Source column order, mapped columns included.
    columns: Vec<String>,
    schema: IndexMap<String, ValueDomain>,
    utterances: Vec<Utterance>,
}

impl Transcript {
    /// Builds a transcript, renumbering rows and making every annotation
    /// column total. Annotation names seen on utterances join the schema as
    /// [`ValueDomain::Untyped`].
    pub fn new(source_id: impl Into<String>, mapping: ColumnMapping, utterances: Vec<Utterance>) -> Self {
        let columns = mapping.mapped_columns().into_iter().map(str::to_string).collect();
        Self::assemble(source_id.into(), mapping, columns, IndexMap::new(), utterances)
    }

    pub(crate) fn assemble(
        source_id: String,
        mapping: ColumnMapping,
        columns: Vec<String>,
        mut schema: IndexMap<String, ValueDomain>,
        mut utterances: Vec<Utterance>,
    ) -> Self {
        for u in &utterances {
            for name in u.annotations.keys() {
                if !schema.contains_key(name) {
                    schema.insert(name.clone(), ValueDomain::Untyped);
                }
            }
        }
        for (i, u) in utterances.iter_mut().enumerate() {
            u.row_index = i;
            for name in schema.keys() {
                u.annotations.entry(name.clone()).or_insert(Value::Null);
            }
        }
        Transcript {
            source_id,
            mapping,
            columns,
            schema,
            utterances,
        }
    }

    /// Convenience constructor from `(speaker, text)` pairs with the default
    /// column mapping.
    pub fn from_pairs<S: Into<String>, T: Into<String>>(
        source_id: impl Into<String>,
        rows: impl IntoIterator<Item = (S, T)>,
    ) -> Self {
        let utterances = rows.into_iter().map(|(s, t)| Utterance::new(s, t)).collect();
        Transcript::new(source_id, ColumnMapping::default(), utterances)
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn mapping(&self) -> &ColumnMapping {
        &self.mapping
    }

    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn schema(&self) -> &IndexMap<String, ValueDomain> {
        &self.schema
    }

    pub fn has_feature(&self, name: &str) -> bool {
        self.schema.contains_key(name)
    }

    pub fn domain(&self, name: &str) -> Option<&ValueDomain> {
        self.schema.get(name)
    }

    /// Output column order: source columns first, then features added later.
    pub fn column_order(&self) -> Vec<String> {
        let mut cols = self.columns.clone();
        for name in self.schema.keys() {
            if !cols.contains(name) {
                cols.push(name.clone());
            }
        }
        cols
    }

    pub fn has_times(&self) -> bool {
        self.mapping.start_time_column.is_some() && self.mapping.end_time_column.is_some()
    }

    /// Values of one feature in row order.
    pub fn feature_values<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Value> + 'a {
        self.utterances.iter().map(move |u| u.get(name))
    }

    /// Adds or replaces an annotation column.
    pub fn with_feature(
        mut self,
        name: impl Into<String>,
        domain: ValueDomain,
        values: Vec<Value>,
    ) -> Result<Self, CorpusError> {
        let name = name.into();
        if values.len() != self.utterances.len() {
            return Err(CorpusError::FeatureLength {
                name,
                expected: self.utterances.len(),
                got: values.len(),
            });
        }
        for (u, v) in self.utterances.iter_mut().zip(values) {
            u.annotations.insert(name.clone(), v);
        }
        self.schema.insert(name, domain);
        Ok(self)
    }

    /// Replaces the utterance list, keeping id, mapping and schema.
    pub(crate) fn with_utterances(&self, utterances: Vec<Utterance>) -> Self {
        Self::assemble(
            self.source_id.clone(),
            self.mapping.clone(),
            self.columns.clone(),
            self.schema.clone(),
            utterances,
        )
    }

    pub fn with_source_id(mut self, source_id: impl Into<String>) -> Self {
        self.source_id = source_id.into();
        self
    }
}
