//! The run configuration: one TOML file, with command-line overrides.
//! Relative paths in the file resolve against the file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use classtalk_core::analyze::SpeakerGroup;
use classtalk_core::annotate::{Role, RoleMap};
use classtalk_core::inference::Limits;
use classtalk_core::llm::DEFAULT_API_KEY_ENV;
use classtalk_core::preprocess::NormalizeOptions;
use classtalk_core::{ColumnMapping, Format};
use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: Option<PathBuf>,
    pub format: Option<String>,
    pub jobs: Option<usize>,
    #[serde(default)]
    pub columns: Columns,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub preprocess: PreprocessSection,
    /// Inline speaker roles, merged over `paths.roles`.
    #[serde(default)]
    pub roles: BTreeMap<String, Role>,
    /// Per-feature speaker allowlists replacing the role-based default.
    #[serde(default)]
    pub speakers: BTreeMap<String, Vec<String>>,
    pub classifier: Option<ClassifierSection>,
    pub llm: Option<LlmSection>,
    /// Speaker groups for lexical analysis, in order.
    #[serde(default)]
    pub groups: Vec<GroupSection>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Columns {
    pub speaker: String,
    pub text: String,
    pub start_time: Option<String>,
    pub end_time: Option<String>,
}

impl Default for Columns {
    fn default() -> Self {
        let m = ColumnMapping::default();
        Columns {
            speaker: m.speaker_column,
            text: m.text_column,
            start_time: None,
            end_time: None,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub roster: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub roles: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessSection {
    pub case_sensitive: bool,
    pub deidentify_speaker_column: bool,
    pub merge_separator: String,
    pub strip_whitespace: bool,
    pub collapse_internal_spaces: bool,
    pub capitalize_sentence_start: bool,
}

impl Default for PreprocessSection {
    fn default() -> Self {
        let n = NormalizeOptions::all();
        PreprocessSection {
            case_sensitive: false,
            deidentify_speaker_column: true,
            merge_separator: " ".into(),
            strip_whitespace: n.strip_whitespace,
            collapse_internal_spaces: n.collapse_internal_spaces,
            capitalize_sentence_start: n.capitalize_sentence_start,
        }
    }
}

impl PreprocessSection {
    pub fn normalize_options(&self) -> NormalizeOptions {
        NormalizeOptions {
            strip_whitespace: self.strip_whitespace,
            collapse_internal_spaces: self.collapse_internal_spaces,
            capitalize_sentence_start: self.capitalize_sentence_start,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSection {
    pub endpoint: Option<String>,
    pub precomputed: Option<PathBuf>,
    pub max_batch: Option<usize>,
    pub timeout_secs: Option<f64>,
    pub retries: Option<u32>,
}

impl ClassifierSection {
    pub fn limits(&self) -> Limits {
        let d = Limits::default();
        Limits {
            max_batch: self.max_batch.unwrap_or(d.max_batch).max(1),
            timeout: self.timeout_secs.map(Duration::from_secs_f64).unwrap_or(d.timeout),
            retries: self.retries.unwrap_or(d.retries),
            backoff: d.backoff,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct LlmSection {
    pub base_url: String,
    pub model: String,
    pub api_key_env: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub context_tokens: usize,
    pub chars_per_token: f64,
    pub timeout_secs: f64,
}

impl Default for LlmSection {
    fn default() -> Self {
        LlmSection {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o-mini".into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            temperature: 0.0,
            max_output_tokens: 512,
            context_tokens: 16_384,
            chars_per_token: 4.0,
            timeout_secs: 120.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSection {
    pub name: String,
    pub speakers: Vec<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        join(&mut self.output_dir);
        join(&mut self.paths.roster);
        join(&mut self.paths.lexicon);
        join(&mut self.paths.roles);
        if let Some(c) = &mut self.classifier {
            join(&mut c.precomputed);
        }
    }

    pub fn mapping(&self) -> Result<ColumnMapping, UsageError> {
        let c = &self.columns;
        let mut m = ColumnMapping::new(c.speaker.clone(), c.text.clone());
        match (&c.start_time, &c.end_time) {
            (Some(s), Some(e)) => m = m.with_times(s.clone(), e.clone()),
            (None, None) => {}
            _ => {
                return Err(UsageError(
                    "columns: set both start_time and end_time, or neither".into(),
                ))
            }
        }
        m.validate().map_err(|e| UsageError(format!("columns: {e}")))?;
        Ok(m)
    }

    pub fn format(&self) -> Result<Option<Format>, UsageError> {
        self.format
            .as_deref()
            .map(|f| f.parse::<Format>().map_err(|e| UsageError(e.to_string())))
            .transpose()
    }

    pub fn role_map(&self) -> Result<RoleMap, UsageError> {
        let mut roles = match &self.paths.roles {
            Some(p) => RoleMap::load(p).map_err(|e| UsageError(e.to_string()))?,
            None => RoleMap::default(),
        };
        for (speaker, role) in &self.roles {
            roles.insert(speaker.clone(), *role);
        }
        Ok(roles)
    }

    /// Configured groups, or `students` and `teacher` from the role map.
    pub fn speaker_groups(&self) -> Result<Vec<SpeakerGroup>, UsageError> {
        if !self.groups.is_empty() {
            return Ok(self
                .groups
                .iter()
                .map(|g| SpeakerGroup::new(g.name.clone(), g.speakers.clone()))
                .collect());
        }
        let roles = self.role_map()?;
        if roles.is_empty() {
            return Err(UsageError(
                "lexical analysis needs speaker groups: add [[groups]] or a role map to the config, or pass --group"
                    .into(),
            ));
        }
        Ok(vec![
            SpeakerGroup::new("students", roles.speakers_with(Role::Student)),
            SpeakerGroup::new("teacher", roles.speakers_with(Role::Teacher)),
        ])
    }
}
