//! Utterance-level annotation.
//!
//! Talk time and math density are computed here. The classifier features go
//! through a [`LabelSource`]; which rows get a label is decided locally by
//! the feature's gate, and everything outside the gate is null.

mod features;
mod gate;
mod lexicon;

use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::{CorpusError, Transcript, Value, ValueDomain};
use crate::exec::{self, Execution};
use crate::inference::{InferenceError, LabelQuery, LabelSource, Prediction};
use crate::matching::PhraseMatcher;

pub use features::{
    builtin_feature, builtin_feature_names, builtin_feature_specs, Backend, FeatureSpec, FOCUSING_QUESTION,
    MATH_DENSITY, STUDENT_REASONING, STUDENT_TALK_MOVES, TALKTIME, TALKTIME_SECONDS, TALKTIME_WORDS,
    TEACHER_TALK_MOVES, UPTAKE,
};
pub use gate::{compute_gate, GateTemplate, GatingRule, PredecessorRequirement, Role, RoleMap, SpeakerSelector};
pub use lexicon::Lexicon;

#[derive(Debug, thiserror::Error)]
pub enum AnnotateError {
    #[error("unknown feature `{name}`; valid features: {}", valid.join(", "))]
    UnknownFeature { name: String, valid: Vec<String> },
    #[error("math density needs a non-empty lexicon")]
    EmptyLexicon,
    #[error("feature `{feature}` gates on speaker roles but no role map was given")]
    RolesRequired { feature: String },
    #[error("feature `{feature}` needs a classifier backend (service endpoint or precomputed labels)")]
    NoClassifier { feature: String },
    #[error("classifier does not serve `{feature}` (available: {})", available.join(", "))]
    NotInInventory { feature: String, available: Vec<String> },
    #[error("feature `{0}` is not classifier-backed")]
    NotClassifierBacked(String),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

impl<T: LabelSource + ?Sized> LabelSource for &T {
    fn inventory(&self) -> Result<Vec<String>, InferenceError> {
        (**self).inventory()
    }

    fn classify(&self, feature: &str, queries: &[LabelQuery<'_>]) -> Result<Vec<Prediction>, InferenceError> {
        (**self).classify(feature, queries)
    }
}

/// A label source plus the feature inventory it reported once up front.
pub struct ClassifierAccess<'a> {
    source: Box<dyn LabelSource + 'a>,
    inventory: Vec<String>,
}

impl<'a> ClassifierAccess<'a> {
    pub fn new(source: impl LabelSource + 'a) -> Result<Self, InferenceError> {
        let inventory = source.inventory()?;
        Ok(ClassifierAccess {
            source: Box::new(source),
            inventory,
        })
    }

    pub fn inventory(&self) -> &[String] {
        &self.inventory
    }

    pub fn serves(&self, feature: &str) -> bool {
        self.inventory.iter().any(|f| f == feature)
    }
}

/// Adds `talktime_words`, and `talktime_seconds` when the transcript maps
/// both time columns.
pub fn annotate_talk_time(transcript: &Transcript) -> Transcript {
    let words = transcript
        .utterances()
        .iter()
        .map(|u| Value::Int(u.word_count() as i64))
        .collect();
    let mut out = transcript
        .clone()
        .with_feature(TALKTIME_WORDS, ValueDomain::Numeric, words)
        .expect("one value per row");
    if transcript.has_times() {
        let seconds = transcript
            .utterances()
            .iter()
            .map(|u| match (u.start_time, u.end_time) {
                (Some(s), Some(e)) => Value::float(e - s),
                _ => Value::Null,
            })
            .collect();
        out = out
            .with_feature(TALKTIME_SECONDS, ValueDomain::Numeric, seconds)
            .expect("one value per row");
    }
    out
}

/// Counts whole-word lexicon hits per utterance (case-insensitive, longest
/// term wins at each position, whitespace runs treated as one space).
pub fn annotate_math_density(transcript: &Transcript, lexicon: &Lexicon) -> Result<Transcript, AnnotateError> {
    if lexicon.is_empty() {
        return Err(AnnotateError::EmptyLexicon);
    }
    let matcher = PhraseMatcher::new(&lexicon.terms, false);
    let counts = transcript
        .utterances()
        .iter()
        .map(|u| {
            let text = lexicon::normalize_spacing(&u.text);
            Value::Int(matcher.count(&text) as i64)
        })
        .collect();
    Ok(transcript
        .clone()
        .with_feature(MATH_DENSITY, ValueDomain::Numeric, counts)?)
}

/// Labels the gated rows of `transcript` with `classifier`. Adds the label
/// column `<name>` and the score column `<name>_score`; ineligible rows get
/// null in both. Nothing is committed if the classifier fails.
pub fn annotate_with_classifier(
    transcript: &Transcript,
    feature: &FeatureSpec,
    rule: &GatingRule,
    classifier: &ClassifierAccess<'_>,
) -> Result<Transcript, AnnotateError> {
    if feature.backend != Backend::Classifier {
        return Err(AnnotateError::NotClassifierBacked(feature.name.clone()));
    }
    if !classifier.serves(&feature.name) {
        return Err(AnnotateError::NotInInventory {
            feature: feature.name.clone(),
            available: classifier.inventory.clone(),
        });
    }
    let mask = compute_gate(transcript, rule);
    let utterances = transcript.utterances();
    let with_context = rule.predecessor_requirement.is_some();
    let queries: Vec<LabelQuery<'_>> = utterances
        .iter()
        .zip(&mask)
        .filter(|(_, &eligible)| eligible)
        .map(|(u, _)| LabelQuery {
            source_id: transcript.source_id(),
            row_index: u.row_index,
            text: &u.text,
            context: with_context.then(|| utterances[u.row_index - 1].text.as_str()),
        })
        .collect();

    let predictions = if queries.is_empty() {
        Vec::new()
    } else {
        classifier.source.classify(&feature.name, &queries)?
    };
    if predictions.len() != queries.len() {
        return Err(InferenceError::Protocol {
            feature: feature.name.clone(),
            message: format!("{} predictions for {} utterances", predictions.len(), queries.len()),
        }
        .into());
    }
    if let ValueDomain::Labels(labels) = &feature.value_domain {
        if let Some(p) = predictions.iter().find(|p| !labels.contains(&p.label)) {
            return Err(InferenceError::Protocol {
                feature: feature.name.clone(),
                message: format!("label {} outside the feature's label set", p.label),
            }
            .into());
        }
    }

    let mut labels = vec![Value::Null; utterances.len()];
    let mut scores = vec![Value::Null; utterances.len()];
    for (q, p) in queries.iter().zip(&predictions) {
        labels[q.row_index] = Value::Int(p.label);
        scores[q.row_index] = Value::float(p.score);
    }
    Ok(transcript
        .clone()
        .with_feature(&feature.name, feature.value_domain.clone(), labels)?
        .with_feature(feature.score_column(), ValueDomain::Numeric, scores)?)
}

/// Everything needed to annotate any built-in feature.
#[derive(Default)]
pub struct Annotator<'a> {
    pub roles: RoleMap,
    pub lexicon: Option<Lexicon>,
    pub classifier: Option<ClassifierAccess<'a>>,
    /// Per-feature speaker allowlists that replace the role-based default.
    pub speaker_overrides: BTreeMap<String, BTreeSet<String>>,
}

impl<'a> Annotator<'a> {
    pub fn spec(&self, name: &str) -> Result<FeatureSpec, AnnotateError> {
        let mut spec = builtin_feature(name).ok_or_else(|| AnnotateError::UnknownFeature {
            name: name.to_string(),
            valid: builtin_feature_names(),
        })?;
        if let Some(speakers) = self.speaker_overrides.get(name) {
            spec.gate.speakers = Some(SpeakerSelector::Speakers(speakers.clone()));
        }
        Ok(spec)
    }

    /// Fails fast on names, missing lexicon/roles/classifier, before any
    /// transcript is touched.
    pub fn check(&self, features: &[String]) -> Result<(), AnnotateError> {
        for name in features {
            let spec = self.spec(name)?;
            match spec.backend {
                Backend::Native if name == MATH_DENSITY => {
                    if self.lexicon.as_ref().is_none_or(Lexicon::is_empty) {
                        return Err(AnnotateError::EmptyLexicon);
                    }
                }
                Backend::Native => {}
                Backend::Classifier => {
                    spec.gate.resolve(&self.roles, name)?;
                    let access = self
                        .classifier
                        .as_ref()
                        .ok_or_else(|| AnnotateError::NoClassifier { feature: name.clone() })?;
                    if !access.serves(name) {
                        return Err(AnnotateError::NotInInventory {
                            feature: name.clone(),
                            available: access.inventory.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn annotate(&self, transcript: &Transcript, feature: &str) -> Result<Transcript, AnnotateError> {
        let spec = self.spec(feature)?;
        match spec.backend {
            Backend::Native if feature == TALKTIME => Ok(annotate_talk_time(transcript)),
            Backend::Native => {
                let lexicon = self.lexicon.as_ref().ok_or(AnnotateError::EmptyLexicon)?;
                annotate_math_density(transcript, lexicon)
            }
            Backend::Classifier => {
                let rule = spec.gate.resolve(&self.roles, feature)?;
                let access = self.classifier.as_ref().ok_or_else(|| AnnotateError::NoClassifier {
                    feature: feature.to_string(),
                })?;
                annotate_with_classifier(transcript, &spec, &rule, access)
            }
        }
    }

    /// Applies `features` in order.
    pub fn annotate_all(&self, transcript: &Transcript, features: &[String]) -> Result<Transcript, AnnotateError> {
        features
            .iter()
            .try_fold(transcript.clone(), |t, f| self.annotate(&t, f))
    }

    /// Per-transcript results, in corpus order.
    pub fn annotate_corpus(
        &self,
        corpus: &[Transcript],
        features: &[String],
        exec: Execution,
    ) -> Vec<Result<Transcript, AnnotateError>> {
        exec::map(exec, corpus, |t| self.annotate_all(t, features))
    }
}
