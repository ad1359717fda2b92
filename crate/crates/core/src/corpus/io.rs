use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use indexmap::IndexMap;
use serde_json::{Map, Number, Value as Json};

use super::{ColumnMapping, CorpusError, Transcript, Utterance, Value, ValueDomain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn from_path(path: &Path) -> Result<Self, CorpusError> {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or_default();
        ext.parse()
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CorpusError::UnknownFormat(other.to_string())),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Loads one conversation. The source id is the file stem.
pub fn load_transcript(path: &Path, format: Format, mapping: &ColumnMapping) -> Result<Transcript, CorpusError> {
    let file = File::open(path).map_err(io_err(path))?;
    let source_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let reader = BufReader::new(file);
    match format {
        Format::Csv => read_csv(reader, source_id, mapping),
        Format::Json => read_json(reader, source_id, mapping),
    }
}

/// Loads every `.csv`/`.json` file directly inside `dir`, sorted by file name.
pub fn load_corpus_dir(dir: &Path, mapping: &ColumnMapping) -> Result<Vec<Transcript>, CorpusError> {
    corpus_files(dir)?
        .into_iter()
        .map(|(path, format)| load_transcript(&path, format, mapping))
        .collect()
}

/// Transcript files directly inside `dir`, sorted by path.
pub fn corpus_files(dir: &Path) -> Result<Vec<(PathBuf, Format)>, CorpusError> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if !path.is_file() {
            continue;
        }
        if let Ok(format) = Format::from_path(&path) {
            files.push((path, format));
        }
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(files)
}

pub fn save_transcript(transcript: &Transcript, path: &Path, format: Format) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut writer = BufWriter::new(file);
    match format {
        Format::Csv => write_csv(transcript, &mut writer)?,
        Format::Json => write_json(transcript, &mut writer)?,
    }
    writer.flush().map_err(io_err(path))
}

struct RowBuilder<'a> {
    mapping: &'a ColumnMapping,
}

impl RowBuilder<'_> {
    fn time(&self, row_index: usize, column: &str, raw: Option<&str>) -> Result<Option<f64>, CorpusError> {
        let Some(raw) = raw.map(str::trim).filter(|s| !s.is_empty()) else {
            return Ok(None);
        };
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(CorpusError::InvalidTime {
                row_index,
                column: column.to_string(),
                value: raw.to_string(),
            }),
        }
    }

    fn finish(
        &self,
        row_index: usize,
        speaker: String,
        text: String,
        start: Option<&str>,
        end: Option<&str>,
        annotations: BTreeMap<String, Value>,
    ) -> Result<Utterance, CorpusError> {
        let start_time = match &self.mapping.start_time_column {
            Some(col) => self.time(row_index, col, start)?,
            None => None,
        };
        let end_time = match &self.mapping.end_time_column {
            Some(col) => self.time(row_index, col, end)?,
            None => None,
        };
        if let (Some(start), Some(end)) = (start_time, end_time) {
            if end < start {
                return Err(CorpusError::TimeOrder { row_index, start, end });
            }
        }
        Ok(Utterance {
            row_index,
            speaker,
            text,
            start_time,
            end_time,
            annotations,
        })
    }
}

fn require_columns(columns: &[String], mapping: &ColumnMapping) -> Result<(), CorpusError> {
    for col in mapping.mapped_columns() {
        if !columns.iter().any(|c| c == col) {
            return Err(CorpusError::MissingColumn {
                column: col.to_string(),
            });
        }
    }
    Ok(())
}

fn untyped_schema(columns: &[String], mapping: &ColumnMapping) -> IndexMap<String, ValueDomain> {
    let mapped = mapping.mapped_columns();
    columns
        .iter()
        .filter(|c| !mapped.contains(&c.as_str()))
        .map(|c| (c.clone(), ValueDomain::Untyped))
        .collect()
}

pub fn read_csv<R: Read>(
    reader: R,
    source_id: impl Into<String>,
    mapping: &ColumnMapping,
) -> Result<Transcript, CorpusError> {
    mapping.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let columns: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    require_columns(&columns, mapping)?;
    let position = |name: &str| columns.iter().position(|c| c == name);
    let speaker_at = position(&mapping.speaker_column).expect("checked");
    let text_at = position(&mapping.text_column).expect("checked");
    let start_at = mapping.start_time_column.as_deref().and_then(position);
    let end_at = mapping.end_time_column.as_deref().and_then(position);
    let schema = untyped_schema(&columns, mapping);
    let builder = RowBuilder { mapping };

    let mut utterances = Vec::new();
    for (row_index, record) in rdr.records().enumerate() {
        let record = record?;
        let cell = |i: usize| record.get(i).unwrap_or_default();
        let mut annotations = BTreeMap::new();
        for (i, col) in columns.iter().enumerate() {
            if schema.contains_key(col) {
                annotations.insert(col.clone(), Value::parse_cell(cell(i)));
            }
        }
        utterances.push(builder.finish(
            row_index,
            cell(speaker_at).to_string(),
            cell(text_at).to_string(),
            start_at.map(cell),
            end_at.map(cell),
            annotations,
        )?);
    }
    Ok(Transcript::assemble(
        source_id.into(),
        mapping.clone(),
        columns,
        schema,
        utterances,
    ))
}

fn json_scalar(v: &Json, row_index: usize, column: &str) -> Result<Value, CorpusError> {
    match v {
        Json::Null => Ok(Value::Null),
        Json::Bool(b) => Ok(Value::Int(i64::from(*b))),
        Json::Number(n) => Ok(match n.as_i64() {
            Some(i) => Value::Int(i),
            None => Value::float(n.as_f64().unwrap_or(f64::NAN)),
        }),
        Json::String(s) => Ok(Value::Text(s.clone())),
        Json::Array(_) | Json::Object(_) => Err(CorpusError::NestedValue {
            row_index,
            column: column.to_string(),
        }),
    }
}

fn json_string(v: Option<&Json>, row_index: usize, column: &str) -> Result<String, CorpusError> {
    match v {
        None => Err(CorpusError::MissingColumn {
            column: column.to_string(),
        }),
        Some(Json::Null) => Ok(String::new()),
        Some(Json::String(s)) => Ok(s.clone()),
        Some(Json::Number(n)) => Ok(n.to_string()),
        Some(Json::Bool(b)) => Ok(b.to_string()),
        Some(_) => Err(CorpusError::NestedValue {
            row_index,
            column: column.to_string(),
        }),
    }
}

fn json_time_text(v: Option<&Json>, row_index: usize, column: &str) -> Result<Option<String>, CorpusError> {
    match v {
        None | Some(Json::Null) => Ok(None),
        Some(Json::Number(n)) => Ok(Some(n.to_string())),
        Some(Json::String(s)) => Ok(Some(s.clone())),
        Some(other) => Err(CorpusError::InvalidTime {
            row_index,
            column: column.to_string(),
            value: other.to_string(),
        }),
    }
}

pub fn read_json<R: Read>(
    reader: R,
    source_id: impl Into<String>,
    mapping: &ColumnMapping,
) -> Result<Transcript, CorpusError> {
    mapping.validate()?;
    let doc: Json = serde_json::from_reader(reader)?;
    let Json::Array(records) = doc else {
        return Err(CorpusError::NotAnArray);
    };
    let mut objects = Vec::with_capacity(records.len());
    let mut columns: Vec<String> = Vec::new();
    for record in records {
        let Json::Object(obj) = record else {
            return Err(CorpusError::NotAnArray);
        };
        for key in obj.keys() {
            if !columns.contains(key) {
                columns.push(key.clone());
            }
        }
        objects.push(obj);
    }
    if objects.is_empty() {
        columns = mapping.mapped_columns().into_iter().map(str::to_string).collect();
    }
    require_columns(&columns, mapping)?;
    let schema = untyped_schema(&columns, mapping);
    let builder = RowBuilder { mapping };

    let mut utterances = Vec::with_capacity(objects.len());
    for (row_index, obj) in objects.iter().enumerate() {
        let speaker = json_string(obj.get(&mapping.speaker_column), row_index, &mapping.speaker_column)?;
        let text = json_string(obj.get(&mapping.text_column), row_index, &mapping.text_column)?;
        let start = match &mapping.start_time_column {
            Some(col) => json_time_text(obj.get(col), row_index, col)?,
            None => None,
        };
        let end = match &mapping.end_time_column {
            Some(col) => json_time_text(obj.get(col), row_index, col)?,
            None => None,
        };
        let mut annotations = BTreeMap::new();
        for col in schema.keys() {
            let v = match obj.get(col) {
                Some(v) => json_scalar(v, row_index, col)?,
                None => Value::Null,
            };
            annotations.insert(col.clone(), v);
        }
        utterances.push(builder.finish(row_index, speaker, text, start.as_deref(), end.as_deref(), annotations)?);
    }
    Ok(Transcript::assemble(
        source_id.into(),
        mapping.clone(),
        columns,
        schema,
        utterances,
    ))
}

fn seconds_cell(v: Option<f64>) -> String {
    v.map(|s| s.to_string()).unwrap_or_default()
}

enum Cell<'a> {
    Speaker,
    Text,
    Start,
    End,
    Feature(&'a str),
}

fn layout<'a>(t: &Transcript, cols: &'a [String]) -> Vec<Cell<'a>> {
    let m = t.mapping();
    cols.iter()
        .map(|c| {
            if *c == m.speaker_column {
                Cell::Speaker
            } else if *c == m.text_column {
                Cell::Text
            } else if m.start_time_column.as_deref() == Some(c.as_str()) {
                Cell::Start
            } else if m.end_time_column.as_deref() == Some(c.as_str()) {
                Cell::End
            } else {
                Cell::Feature(c)
            }
        })
        .collect()
}

pub fn write_csv<W: Write>(transcript: &Transcript, writer: W) -> Result<(), CorpusError> {
    let cols = transcript.column_order();
    let cells = layout(transcript, &cols);
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(&cols)?;
    for u in transcript.utterances() {
        let record: Vec<String> = cells
            .iter()
            .map(|c| match c {
                Cell::Speaker => u.speaker.clone(),
                Cell::Text => u.text.clone(),
                Cell::Start => seconds_cell(u.start_time),
                Cell::End => seconds_cell(u.end_time),
                Cell::Feature(name) => u.get(name).to_cell(),
            })
            .collect();
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| CorpusError::Csv(e.into()))?;
    Ok(())
}

fn json_number(v: f64) -> Json {
    Number::from_f64(v).map(Json::Number).unwrap_or(Json::Null)
}

fn json_value(v: &Value) -> Json {
    match v {
        Value::Null => Json::Null,
        Value::Int(i) => Json::from(*i),
        Value::Float(f) => json_number(*f),
        Value::Text(s) => Json::String(s.clone()),
    }
}

/// Writes a pretty-printed JSON array with a trailing newline.
pub fn write_json<W: Write>(transcript: &Transcript, mut writer: W) -> Result<(), CorpusError> {
    let cols = transcript.column_order();
    let cells = layout(transcript, &cols);
    let rows: Vec<Json> = transcript
        .utterances()
        .iter()
        .map(|u| {
            let mut obj = Map::new();
            for (col, cell) in cols.iter().zip(&cells) {
                let v = match cell {
                    Cell::Speaker => Json::String(u.speaker.clone()),
                    Cell::Text => Json::String(u.text.clone()),
                    Cell::Start => u.start_time.map(json_number).unwrap_or(Json::Null),
                    Cell::End => u.end_time.map(json_number).unwrap_or(Json::Null),
                    Cell::Feature(name) => json_value(u.get(name)),
                };
                obj.insert(col.clone(), v);
            }
            Json::Object(obj)
        })
        .collect();
    serde_json::to_writer_pretty(&mut writer, &Json::Array(rows))?;
    writer
        .write_all(b"\n")
        .map_err(|e| CorpusError::Json(serde_json::Error::io(e)))?;
    Ok(())
}
