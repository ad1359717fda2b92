//! Classifier access.
//!
//! Neural features are served by an external process speaking a small JSON
//! protocol (`POST /classify`, `GET /health`). [`HttpClassifier`] is the
//! client; [`PrecomputedLabels`] answers the same questions from a CSV file so
//! annotation can run offline.

mod http;
mod precomputed;

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use http::{classify_batch, health_check, HttpClassifier};
pub use precomputed::{load_precomputed, PrecomputedLabels};

/// Classifier-backed features and their label counts.
pub const CLASSIFIER_FEATURES: [(&str, i64); 5] = [
    ("student_reasoning", 2),
    ("focusing_question", 2),
    ("teacher_talk_moves", 7),
    ("student_talk_moves", 5),
    ("uptake", 2),
];

/// Label range `0..n` for a known classifier feature.
pub fn label_count(feature: &str) -> Option<i64> {
    CLASSIFIER_FEATURES
        .iter()
        .find(|(name, _)| *name == feature)
        .map(|&(_, n)| n)
}

#[derive(Debug, thiserror::Error)]
pub enum InferenceError {
    #[error("transport error talking to {endpoint}: {message}")]
    Transport { endpoint: String, message: String },
    #[error("{endpoint} answered HTTP {status}: {body}")]
    Status {
        endpoint: String,
        status: u16,
        body: String,
    },
    #[error("protocol error for feature `{feature}`: {message}")]
    Protocol { feature: String, message: String },
    #[error("unknown classifier feature `{0}`")]
    UnknownFeature(String),
    #[error("empty classification request for `{0}`")]
    EmptyRequest(String),
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl InferenceError {
    pub(crate) fn protocol(feature: &str, message: impl Into<String>) -> Self {
        InferenceError::Protocol {
            feature: feature.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifierItem {
    pub text: String,
    pub context: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifierRequest {
    pub feature: String,
    pub items: Vec<ClassifierItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierResponse {
    pub labels: Vec<i64>,
    pub scores: Vec<f64>,
    pub model_id: String,
}

impl ClassifierResponse {
    /// Checks lengths, label range and score range against the request.
    pub fn validate(&self, request: &ClassifierRequest) -> Result<(), InferenceError> {
        let feature = request.feature.as_str();
        let n = request.items.len();
        if self.labels.len() != n || self.scores.len() != n {
            return Err(InferenceError::protocol(
                feature,
                format!(
                    "expected {n} results, got {} labels and {} scores",
                    self.labels.len(),
                    self.scores.len()
                ),
            ));
        }
        let classes = label_count(feature).ok_or_else(|| InferenceError::UnknownFeature(feature.into()))?;
        if let Some(bad) = self.labels.iter().find(|&&l| !(0..classes).contains(&l)) {
            return Err(InferenceError::protocol(
                feature,
                format!("label {bad} outside 0..{classes}"),
            ));
        }
        if let Some(bad) = self.scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(InferenceError::protocol(feature, format!("score {bad} outside [0, 1]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub ok: bool,
    pub features: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_batch: usize,
    pub timeout: Duration,
    pub retries: u32,
    /// First retry delay; doubles on every further attempt.
    pub backoff: Duration,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_batch: 32,
            timeout: Duration::from_secs(30),
            retries: 2,
            backoff: Duration::from_millis(250),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: i64,
    pub score: f64,
}

/// One eligible utterance handed to a label source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelQuery<'a> {
    pub source_id: &'a str,
    pub row_index: usize,
    pub text: &'a str,
    pub context: Option<&'a str>,
}

/// Anything that can label utterances for a classifier feature.
pub trait LabelSource: Send + Sync {
    /// Features this source can answer for.
    fn inventory(&self) -> Result<Vec<String>, InferenceError>;

    /// One prediction per query, in query order.
    fn classify(&self, feature: &str, queries: &[LabelQuery<'_>]) -> Result<Vec<Prediction>, InferenceError>;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(n: usize) -> ClassifierRequest {
        ClassifierRequest {
            feature: "teacher_talk_moves".into(),
            items: vec![
                ClassifierItem {
                    text: "x".into(),
                    context: None
                };
                n
            ],
        }
    }

    #[test]
    fn validate_lengths_and_domain() {
        let ok = ClassifierResponse {
            labels: vec![0, 6],
            scores: vec![0.5, 1.0],
            model_id: "m".into(),
        };
        assert!(ok.validate(&request(2)).is_ok());
        assert!(ok.validate(&request(3)).is_err());
        let bad = ClassifierResponse {
            labels: vec![0, 7],
            ..ok.clone()
        };
        match bad.validate(&request(2)).unwrap_err() {
            InferenceError::Protocol { feature, .. } => assert_eq!(feature, "teacher_talk_moves"),
            other => panic!("{other:?}"),
        }
        let bad_score = ClassifierResponse {
            scores: vec![0.5, 1.5],
            ..ok
        };
        assert!(bad_score.validate(&request(2)).is_err());
    }

    #[test]
    fn wire_shape() {
        let req = ClassifierRequest {
            feature: "uptake".into(),
            items: vec![ClassifierItem {
                text: "good idea".into(),
                context: Some("I added them".into()),
            }],
        };
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"feature":"uptake","items":[{"text":"good idea","context":"I added them"}]}"#
        );
        let resp: ClassifierResponse = serde_json::from_str(r#"{"labels":[1],"scores":[0.9],"model_id":"m"}"#).unwrap();
        assert_eq!(resp.labels, vec![1]);
    }
}
