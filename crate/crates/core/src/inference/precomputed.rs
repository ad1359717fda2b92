use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::{label_count, InferenceError, LabelQuery, LabelSource, Prediction};

type Key = (String, usize);

/// Labels read from a CSV with header `source_id,row_index,feature,label,score`.
#[derive(Debug, Clone, Default)]
pub struct PrecomputedLabels {
    by_feature: BTreeMap<String, HashMap<Key, Prediction>>,
}

pub const PRECOMPUTED_HEADER: [&str; 5] = ["source_id", "row_index", "feature", "label", "score"];

impl PrecomputedLabels {
    /// Reads every feature in the file.
    pub fn load(path: &Path) -> Result<Self, InferenceError> {
        let file = File::open(path).map_err(|source| InferenceError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_reader(file, path, None)
    }

    pub fn from_reader<R: Read>(reader: R, path: &Path, only: Option<&str>) -> Result<Self, InferenceError> {
        let parse_err = |line: u64, message: String| InferenceError::Parse {
            path: PathBuf::from(path),
            line,
            message,
        };
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?;
        if header.iter().ne(PRECOMPUTED_HEADER) {
            return Err(parse_err(
                1,
                format!("expected header {}", PRECOMPUTED_HEADER.join(",")),
            ));
        }
        let mut out = PrecomputedLabels::default();
        for record in rdr.records() {
            let record = record.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                parse_err(line, e.to_string())
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let field = |i: usize| record.get(i).unwrap_or_default();
            let feature = field(2);
            if only.is_some_and(|f| f != feature) {
                continue;
            }
            let row_index: usize = field(1)
                .parse()
                .map_err(|_| parse_err(line, format!("bad row_index `{}`", field(1))))?;
            let label: i64 = field(3)
                .parse()
                .map_err(|_| parse_err(line, format!("bad label `{}`", field(3))))?;
            let score: f64 = field(4)
                .parse()
                .ok()
                .filter(|s: &f64| (0.0..=1.0).contains(s))
                .ok_or_else(|| parse_err(line, format!("bad score `{}`", field(4))))?;
            let classes =
                label_count(feature).ok_or_else(|| parse_err(line, format!("unknown feature `{feature}`")))?;
            if !(0..classes).contains(&label) {
                return Err(parse_err(line, format!("label {label} outside 0..{classes}")));
            }
            let key = (field(0).to_string(), row_index);
            let table = out.by_feature.entry(feature.to_string()).or_default();
            if table.insert(key, Prediction { label, score }).is_some() {
                return Err(parse_err(
                    line,
                    format!("duplicate key ({}, {row_index}, {feature})", field(0)),
                ));
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.by_feature.values().map(HashMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, feature: &str, source_id: &str, row_index: usize) -> Option<Prediction> {
        self.by_feature
            .get(feature)?
            .get(&(source_id.to_string(), row_index))
            .copied()
    }

    pub fn insert(&mut self, feature: &str, source_id: &str, row_index: usize, prediction: Prediction) {
        self.by_feature
            .entry(feature.to_string())
            .or_default()
            .insert((source_id.to_string(), row_index), prediction);
    }

    /// Writes the table sorted by feature, source id and row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(PRECOMPUTED_HEADER)?;
        for (feature, table) in &self.by_feature {
            let mut rows: Vec<_> = table.iter().collect();
            rows.sort_by(|a, b| a.0.cmp(b.0));
            for ((source_id, row), p) in rows {
                w.write_record([
                    source_id.as_str(),
                    &row.to_string(),
                    feature,
                    &p.label.to_string(),
                    &format!("{:?}", p.score),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Labels for a single feature.
pub fn load_precomputed(path: &Path, feature: &str) -> Result<PrecomputedLabels, InferenceError> {
    let file = File::open(path).map_err(|source| InferenceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    PrecomputedLabels::from_reader(file, path, Some(feature))
}

impl LabelSource for PrecomputedLabels {
    fn inventory(&self) -> Result<Vec<String>, InferenceError> {
        Ok(self.by_feature.keys().cloned().collect())
    }

    fn classify(&self, feature: &str, queries: &[LabelQuery<'_>]) -> Result<Vec<Prediction>, InferenceError> {
        queries
            .iter()
            .map(|q| {
                self.get(feature, q.source_id, q.row_index).ok_or_else(|| {
                    InferenceError::protocol(
                        feature,
                        format!("no precomputed label for ({}, {})", q.source_id, q.row_index),
                    )
                })
            })
            .collect()
    }
}
