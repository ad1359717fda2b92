use std::collections::BTreeMap;

use super::gate::{GateTemplate, Role, SpeakerSelector};
use crate::corpus::ValueDomain;
use crate::inference::label_count;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Native,
    Classifier,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpec {
    pub name: String,
    pub value_domain: ValueDomain,
    pub label_names: Option<BTreeMap<i64, String>>,
    pub gate: GateTemplate,
    pub backend: Backend,
}

impl FeatureSpec {
    pub fn score_column(&self) -> String {
        format!("{}_score", self.name)
    }

    pub fn label_name(&self, label: i64) -> Option<&str> {
        self.label_names.as_ref()?.get(&label).map(String::as_str)
    }
}

pub const TALKTIME: &str = "talktime";
pub const TALKTIME_WORDS: &str = "talktime_words";
pub const TALKTIME_SECONDS: &str = "talktime_seconds";
pub const MATH_DENSITY: &str = "math_density";
pub const STUDENT_REASONING: &str = "student_reasoning";
pub const FOCUSING_QUESTION: &str = "focusing_question";
pub const TEACHER_TALK_MOVES: &str = "teacher_talk_moves";
pub const STUDENT_TALK_MOVES: &str = "student_talk_moves";
pub const UPTAKE: &str = "uptake";

const TEACHER_MOVES: [&str; 7] = [
    "No Talk Move Detected",
    "Keeping Everyone Together",
    "Getting Students to Relate to Another Student's Idea",
    "Restating",
    "Revoicing",
    "Pressing for Accuracy",
    "Pressing for Reasoning",
];

const STUDENT_MOVES: [&str; 5] = [
    "No Talk Move Detected",
    "Relating to Another Student",
    "Asking for More Information",
    "Making a Claim",
    "Providing Evidence or Reasoning",
];

fn names(list: &[&str]) -> BTreeMap<i64, String> {
    list.iter()
        .enumerate()
        .map(|(i, s)| (i as i64, (*s).to_string()))
        .collect()
}

fn classifier(name: &str, gate: GateTemplate, label_names: Option<BTreeMap<i64, String>>) -> FeatureSpec {
    let n = label_count(name).expect("classifier feature registered in inference");
    FeatureSpec {
        name: name.to_string(),
        value_domain: ValueDomain::Labels((0..n).collect()),
        label_names,
        gate,
        backend: Backend::Classifier,
    }
}

fn native(name: &str) -> FeatureSpec {
    FeatureSpec {
        name: name.to_string(),
        value_domain: ValueDomain::Numeric,
        label_names: None,
        gate: GateTemplate::default(),
        backend: Backend::Native,
    }
}

fn role_gate(role: Role) -> GateTemplate {
    GateTemplate {
        speakers: Some(SpeakerSelector::Role(role)),
        ..GateTemplate::default()
    }
}

/// The seven built-in features, in a fixed order.
pub fn builtin_feature_specs() -> Vec<FeatureSpec> {
    vec![
        native(TALKTIME),
        native(MATH_DENSITY),
        classifier(
            STUDENT_REASONING,
            GateTemplate {
                min_words: Some(8),
                ..role_gate(Role::Student)
            },
            None,
        ),
        classifier(FOCUSING_QUESTION, role_gate(Role::Teacher), None),
        classifier(
            TEACHER_TALK_MOVES,
            role_gate(Role::Teacher),
            Some(names(&TEACHER_MOVES)),
        ),
        classifier(
            STUDENT_TALK_MOVES,
            role_gate(Role::Student),
            Some(names(&STUDENT_MOVES)),
        ),
        classifier(
            UPTAKE,
            GateTemplate {
                predecessor: Some((SpeakerSelector::Role(Role::Student), 5)),
                ..role_gate(Role::Teacher)
            },
            None,
        ),
    ]
}

pub fn builtin_feature(name: &str) -> Option<FeatureSpec> {
    builtin_feature_specs().into_iter().find(|s| s.name == name)
}

pub fn builtin_feature_names() -> Vec<String> {
    builtin_feature_specs().into_iter().map(|s| s.name).collect()
}
