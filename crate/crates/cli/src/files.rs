use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use classtalk_core::corpus::{corpus_files, load_transcript, write_csv, write_json, CorpusError};
use classtalk_core::{ColumnMapping, Format, Transcript};

use crate::manifest::MANIFEST_NAME;
use crate::UsageError;

#[derive(Debug, Clone)]
pub struct InputFile {
    pub path: PathBuf,
    pub format: Format,
}

impl InputFile {
    pub fn source_id(&self) -> String {
        self.path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    }

    pub fn load(&self, mapping: &ColumnMapping) -> Result<Transcript, CorpusError> {
        load_transcript(&self.path, self.format, mapping)
    }

    pub fn display(&self) -> String {
        self.path.display().to_string()
    }
}

/// Files as given, directories expanded non-recursively. Run manifests are
/// skipped so an output directory can be fed to the next command.
pub fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<InputFile>, UsageError> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let found = corpus_files(input).map_err(|e| UsageError(e.to_string()))?;
            files.extend(
                found
                    .into_iter()
                    .filter(|(p, _)| p.file_name().is_none_or(|n| n != MANIFEST_NAME))
                    .map(|(path, format)| InputFile { path, format }),
            );
        } else if input.is_file() {
            let format = Format::from_path(input).map_err(|e| UsageError(e.to_string()))?;
            files.push(InputFile {
                path: input.clone(),
                format,
            });
        } else {
            return Err(UsageError(format!("input {} does not exist", input.display())));
        }
    }
    if files.is_empty() {
        return Err(UsageError(
            "no transcript files (.csv or .json) among the inputs".into(),
        ));
    }
    let mut seen: BTreeMap<String, &Path> = BTreeMap::new();
    for f in &files {
        if let Some(prev) = seen.insert(f.source_id(), &f.path) {
            return Err(UsageError(format!(
                "{} and {} share the source id `{}`",
                prev.display(),
                f.path.display(),
                f.source_id()
            )));
        }
    }
    Ok(files)
}

/// Creates `out` and refuses to write into a directory that holds inputs.
pub fn prepare_output_dir(out: &Path, inputs: &[InputFile]) -> Result<(), UsageError> {
    fs::create_dir_all(out).map_err(|e| UsageError(format!("cannot create {}: {e}", out.display())))?;
    let out_canon = fs::canonicalize(out).map_err(|e| UsageError(format!("{}: {e}", out.display())))?;
    for f in inputs {
        let parent = f
            .path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        if fs::canonicalize(parent).ok().as_deref() == Some(out_canon.as_path()) {
            return Err(UsageError(format!(
                "output directory {} contains input {}; choose a different --output-dir",
                out.display(),
                f.display()
            )));
        }
    }
    Ok(())
}

pub fn encode(transcript: &Transcript, format: Format) -> Result<Vec<u8>, CorpusError> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => write_csv(transcript, &mut buf)?,
        Format::Json => write_json(transcript, &mut buf)?,
    }
    Ok(buf)
}

/// Write to a sibling temp file, then rename over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}
