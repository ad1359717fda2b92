//! Per-run record written next to the outputs. It holds no timestamps or
//! absolute output paths, so identical runs produce identical manifests.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::files::write_atomic;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Steps or features, in the order they ran.
    pub steps: Vec<String>,
    pub options: serde_json::Value,
    pub files: Vec<FileRecord>,
    pub succeeded: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub input: String,
    pub source_id: String,
    pub status: Status,
    /// File name inside the output directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows_in: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows_out: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replacements: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

impl FileRecord {
    pub fn new(input: String, source_id: String) -> Self {
        FileRecord {
            input,
            source_id,
            status: Status::Ok,
            output: None,
            rows_in: None,
            rows_out: None,
            replacements: None,
            report: None,
            error: None,
        }
    }

    pub fn failed(mut self, error: impl ToString) -> Self {
        self.status = Status::Failed;
        self.error = Some(error.to_string());
        self.output = None;
        self
    }
}

impl Manifest {
    pub fn new(command: &str, steps: Vec<String>, options: serde_json::Value, files: Vec<FileRecord>) -> Self {
        let failed = files.iter().filter(|f| f.status == Status::Failed).count();
        Manifest {
            tool: "classtalk".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            steps,
            options,
            succeeded: files.len() - failed,
            failed,
            files,
        }
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        write_atomic(&dir.join(MANIFEST_NAME), text.as_bytes())
    }
}
