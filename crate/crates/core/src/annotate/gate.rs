use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AnnotateError;
use crate::corpus::Transcript;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Teacher,
    Student,
    Other,
}

/// Speaker label to role, as loaded from `{"T": "teacher", "S1": "student"}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RoleMap(pub BTreeMap<String, Role>);

impl RoleMap {
    pub fn from_json_str(s: &str) -> Result<Self, AnnotateError> {
        serde_json::from_str(s).map_err(|e| AnnotateError::Config(format!("role map: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, AnnotateError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| AnnotateError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn insert(&mut self, speaker: impl Into<String>, role: Role) {
        self.0.insert(speaker.into(), role);
    }

    pub fn role_of(&self, speaker: &str) -> Option<Role> {
        self.0.get(speaker).copied()
    }

    pub fn speakers_with(&self, role: Role) -> BTreeSet<String> {
        self.0
            .iter()
            .filter(|(_, r)| **r == role)
            .map(|(s, _)| s.clone())
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<(S, Role)> for RoleMap {
    fn from_iter<I: IntoIterator<Item = (S, Role)>>(iter: I) -> Self {
        RoleMap(iter.into_iter().map(|(s, r)| (s.into(), r)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredecessorRequirement {
    pub speaker_allowlist: BTreeSet<String>,
    pub min_words: usize,
}

/// Eligibility predicate over an utterance and its predecessor.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GatingRule {
    pub speaker_allowlist: Option<BTreeSet<String>>,
    pub min_words: Option<usize>,
    pub predecessor_requirement: Option<PredecessorRequirement>,
}

impl GatingRule {
    pub fn is_open(&self) -> bool {
        *self == GatingRule::default()
    }
}

/// One flag per utterance: may it receive a classifier label?
pub fn compute_gate(transcript: &Transcript, rule: &GatingRule) -> Vec<bool> {
    let utterances = transcript.utterances();
    let counts: Vec<usize> = utterances.iter().map(|u| u.word_count()).collect();
    utterances
        .iter()
        .enumerate()
        .map(|(i, u)| {
            if let Some(allow) = &rule.speaker_allowlist {
                if !allow.contains(&u.speaker) {
                    return false;
                }
            }
            if let Some(min) = rule.min_words {
                if counts[i] < min {
                    return false;
                }
            }
            if let Some(pred) = &rule.predecessor_requirement {
                let Some(prev) = i.checked_sub(1) else {
                    return false;
                };
                if !pred.speaker_allowlist.contains(&utterances[prev].speaker) || counts[prev] < pred.min_words {
                    return false;
                }
            }
            true
        })
        .collect()
}

/// Which speakers a gate admits, before a role map is known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpeakerSelector {
    Role(Role),
    Speakers(BTreeSet<String>),
}

impl SpeakerSelector {
    fn resolve(&self, roles: &RoleMap, feature: &str) -> Result<BTreeSet<String>, AnnotateError> {
        match self {
            SpeakerSelector::Speakers(s) => Ok(s.clone()),
            SpeakerSelector::Role(_) if roles.is_empty() => Err(AnnotateError::RolesRequired {
                feature: feature.to_string(),
            }),
            SpeakerSelector::Role(role) => Ok(roles.speakers_with(*role)),
        }
    }
}

/// A [`GatingRule`] whose speaker sets may still be expressed as roles.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GateTemplate {
    pub speakers: Option<SpeakerSelector>,
    pub min_words: Option<usize>,
    pub predecessor: Option<(SpeakerSelector, usize)>,
}

impl GateTemplate {
    pub fn resolve(&self, roles: &RoleMap, feature: &str) -> Result<GatingRule, AnnotateError> {
        Ok(GatingRule {
            speaker_allowlist: self.speakers.as_ref().map(|s| s.resolve(roles, feature)).transpose()?,
            min_words: self.min_words,
            predecessor_requirement: self
                .predecessor
                .as_ref()
                .map(|(s, min_words)| {
                    Ok::<_, AnnotateError>(PredecessorRequirement {
                        speaker_allowlist: s.resolve(roles, feature)?,
                        min_words: *min_words,
                    })
                })
                .transpose()?,
        })
    }
}
