use std::collections::HashMap;

use super::quantitative::Tally;
use super::{
    feature_kind, require_feature, AnalysisError, AnalysisReport, FeatureKind, GroupBy, ReportBody, ReportKind,
    Representation,
};
use crate::corpus::Transcript;
use crate::exec::{self, Execution};

/// Line-based split into `num_bins` contiguous ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinSpec {
    pub num_bins: usize,
}

impl BinSpec {
    pub fn new(num_bins: usize) -> Result<Self, AnalysisError> {
        if num_bins == 0 {
            return Err(AnalysisError::Config("number of bins must be at least 1".into()));
        }
        Ok(BinSpec { num_bins })
    }
}

/// Half-open row ranges: bin `b` is `[b*len/B, (b+1)*len/B)`.
pub fn bin_edges(len: usize, spec: BinSpec) -> Vec<(usize, usize)> {
    let b = spec.num_bins.max(1) as u128;
    let l = len as u128;
    (0..b)
        .map(|i| ((i * l / b) as usize, ((i + 1) * l / b) as usize))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalSeries {
    pub group: String,
    pub label: Option<i64>,
    /// One value per bin.
    pub values: Vec<f64>,
}

impl TemporalSeries {
    pub fn name(&self, feature: &str) -> String {
        match self.label {
            Some(l) if self.group == super::quantitative::ALL => super::label_display(feature, l),
            Some(l) => format!("{} / {}", self.group, super::label_display(feature, l)),
            None => self.group.clone(),
        }
    }
}

fn series_from_bins(bins: &[Tally], kind: &FeatureKind, repr: Representation) -> Vec<TemporalSeries> {
    let mut whole = Tally::default();
    for b in bins {
        whole.merge(b);
    }
    let keys: Vec<(String, Option<i64>)> = whole.raw_cells(kind).into_iter().map(|(g, l, _, _)| (g, l)).collect();
    let mut series: Vec<TemporalSeries> = keys
        .iter()
        .map(|(group, label)| TemporalSeries {
            group: group.clone(),
            label: *label,
            values: Vec::with_capacity(bins.len()),
        })
        .collect();
    for bin in bins {
        // An empty bin has nothing to normalize; it reads as zero.
        let rows = bin.rows(kind, repr).unwrap_or_default();
        let by_key: HashMap<(&str, Option<i64>), f64> =
            rows.iter().map(|r| ((r.group.as_str(), r.label), r.value)).collect();
        for s in &mut series {
            s.values
                .push(by_key.get(&(s.group.as_str(), s.label)).copied().unwrap_or(0.0));
        }
    }
    series
}

fn report(
    feature: &str,
    spec: BinSpec,
    edges: Vec<(usize, usize)>,
    series: Vec<TemporalSeries>,
    repr: Representation,
) -> AnalysisReport {
    let mut groups: Vec<String> = Vec::new();
    for s in &series {
        if !groups.contains(&s.group) {
            groups.push(s.group.clone());
        }
    }
    AnalysisReport {
        kind: ReportKind::Temporal,
        title: format!("{feature} over time ({} bins, {})", spec.num_bins, repr.as_str()),
        feature: Some(feature.to_string()),
        representation: Some(repr),
        groups,
        x_label: "bin".into(),
        y_label: repr.as_str().into(),
        body: ReportBody::Temporal {
            num_bins: spec.num_bins,
            edges,
            series,
        },
    }
}

fn bin_tallies(
    t: &Transcript,
    feature: &str,
    spec: BinSpec,
    kind: &FeatureKind,
    group_by: GroupBy,
) -> Result<Vec<Tally>, AnalysisError> {
    let rows = t.utterances();
    bin_edges(rows.len(), spec)
        .into_iter()
        .map(|(lo, hi)| Tally::of_rows(t, &rows[lo..hi], feature, kind, group_by))
        .collect()
}

/// Aggregates `feature` per bin with quantitative semantics; percentages
/// normalize within each bin.
pub fn temporal_profile(
    transcript: &Transcript,
    feature: &str,
    bins: BinSpec,
    group_by: GroupBy,
    representation: Representation,
) -> Result<AnalysisReport, AnalysisError> {
    let corpus = std::slice::from_ref(transcript);
    require_feature(corpus, feature)?;
    let kind = feature_kind(corpus, feature);
    let tallies = bin_tallies(transcript, feature, bins, &kind, group_by)?;
    let series = series_from_bins(&tallies, &kind, representation);
    Ok(report(
        feature,
        bins,
        bin_edges(transcript.len(), bins),
        series,
        representation,
    ))
}

/// Sums raw aggregates per relative bin across transcripts, then applies
/// the representation.
pub fn temporal_profile_corpus(
    corpus: &[Transcript],
    feature: &str,
    bins: BinSpec,
    group_by: GroupBy,
    representation: Representation,
) -> Result<AnalysisReport, AnalysisError> {
    temporal_profile_corpus_with(Execution::default(), corpus, feature, bins, group_by, representation)
}

pub fn temporal_profile_corpus_with(
    exec: Execution,
    corpus: &[Transcript],
    feature: &str,
    bins: BinSpec,
    group_by: GroupBy,
    representation: Representation,
) -> Result<AnalysisReport, AnalysisError> {
    if let [single] = corpus {
        return temporal_profile(single, feature, bins, group_by, representation);
    }
    require_feature(corpus, feature)?;
    let kind = feature_kind(corpus, feature);
    let per_transcript = exec::try_map(exec, corpus, |t| bin_tallies(t, feature, bins, &kind, group_by))?;
    let mut merged = vec![Tally::default(); bins.num_bins];
    for tallies in &per_transcript {
        for (acc, t) in merged.iter_mut().zip(tallies) {
            acc.merge(t);
        }
    }
    let series = series_from_bins(&merged, &kind, representation);
    Ok(report(feature, bins, Vec::new(), series, representation))
}
