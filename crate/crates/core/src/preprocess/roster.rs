use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PreprocessError;

/// One person: every way their name may appear, and what to write instead.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosterEntry {
    #[serde(rename = "names")]
    pub name_variants: Vec<String>,
    pub replacement: String,
}

impl RosterEntry {
    pub fn new<I, S>(names: I, replacement: impl Into<String>) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        RosterEntry {
            name_variants: names.into_iter().map(Into::into).collect(),
            replacement: replacement.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Roster {
    pub entries: Vec<RosterEntry>,
}

impl Roster {
    pub fn new(entries: Vec<RosterEntry>) -> Result<Self, PreprocessError> {
        let roster = Roster { entries };
        roster.validate()?;
        Ok(roster)
    }

    pub fn from_json_str(s: &str) -> Result<Self, PreprocessError> {
        let roster: Roster = serde_json::from_str(s).map_err(PreprocessError::RosterParse)?;
        roster.validate()?;
        Ok(roster)
    }

    pub fn load(path: &Path) -> Result<Self, PreprocessError> {
        let text = fs::read_to_string(path).map_err(|source| PreprocessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<(), PreprocessError> {
        for (i, entry) in self.entries.iter().enumerate() {
            if entry.name_variants.is_empty() {
                return Err(PreprocessError::InvalidRoster(format!("entry {i} has no names")));
            }
            if entry.name_variants.iter().any(|n| n.trim().is_empty()) {
                return Err(PreprocessError::InvalidRoster(format!("entry {i} has an empty name")));
            }
        }
        Ok(())
    }

    /// Replacement strings shared by more than one entry.
    pub fn warnings(&self) -> Vec<String> {
        let mut owners: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, e) in self.entries.iter().enumerate() {
            owners.entry(e.replacement.as_str()).or_default().push(i);
        }
        owners
            .into_iter()
            .filter(|(_, idx)| idx.len() > 1)
            .map(|(rep, idx)| format!("replacement `{rep}` is shared by entries {idx:?}"))
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
