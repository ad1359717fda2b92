use std::collections::BTreeMap;

use indexmap::IndexMap;

use super::{
    feature_kind, require_feature, AnalysisError, AnalysisReport, FeatureKind, GroupBy, ReportBody, ReportKind,
    Representation,
};
use crate::corpus::{Transcript, Utterance};
use crate::exec::{self, Execution};

pub(crate) const ALL: &str = "all";

#[derive(Debug, Clone, PartialEq)]
pub struct QuantRow {
    pub group: String,
    /// Set for label features.
    pub label: Option<i64>,
    pub value: f64,
}

/// Integer values are summed exactly; only float inputs can round.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct GroupTally {
    int_sum: i128,
    float_sum: f64,
    non_null: u64,
    labels: BTreeMap<i64, u64>,
}

impl GroupTally {
    fn sum(&self) -> f64 {
        self.int_sum as f64 + self.float_sum
    }

    fn merge(&mut self, other: &GroupTally) {
        self.int_sum += other.int_sum;
        self.float_sum += other.float_sum;
        self.non_null += other.non_null;
        for (l, c) in &other.labels {
            *self.labels.entry(*l).or_default() += c;
        }
    }
}

/// Per-group aggregates; groups keep first-appearance order.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Tally {
    pub groups: IndexMap<String, GroupTally>,
}

impl Tally {
    pub fn add(
        &mut self,
        transcript: &Transcript,
        u: &Utterance,
        feature: &str,
        kind: &FeatureKind,
        group_by: GroupBy,
    ) -> Result<(), AnalysisError> {
        let value = u.get(feature);
        if value.is_null() {
            return Ok(());
        }
        let bad = || AnalysisError::BadValue {
            feature: feature.to_string(),
            source_id: transcript.source_id().to_string(),
            row_index: u.row_index,
            value: value.to_string(),
        };
        let group = match group_by {
            GroupBy::None => ALL,
            GroupBy::Speaker => u.speaker.as_str(),
        };
        let tally = match self.groups.get_mut(group) {
            Some(t) => t,
            None => self.groups.entry(group.to_string()).or_default(),
        };
        match kind {
            FeatureKind::Numeric => match value {
                crate::corpus::Value::Int(i) => tally.int_sum += i128::from(*i),
                other => tally.float_sum += other.as_f64().ok_or_else(bad)?,
            },
            FeatureKind::Labels(_) => {
                let label = value.as_label().ok_or_else(bad)?;
                *tally.labels.entry(label).or_default() += 1;
            }
        }
        tally.non_null += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &Tally) {
        for (g, t) in &other.groups {
            self.groups.entry(g.clone()).or_default().merge(t);
        }
    }

    pub fn of_rows(
        transcript: &Transcript,
        rows: &[Utterance],
        feature: &str,
        kind: &FeatureKind,
        group_by: GroupBy,
    ) -> Result<Tally, AnalysisError> {
        let mut tally = Tally::default();
        for u in rows {
            tally.add(transcript, u, feature, kind, group_by)?;
        }
        Ok(tally)
    }

    /// `(group, label, raw, non-null count)` cells. Label features list every
    /// label in the domain plus any extra label seen.
    pub fn raw_cells(&self, kind: &FeatureKind) -> Vec<(String, Option<i64>, f64, u64)> {
        let mut cells = Vec::new();
        for (g, t) in &self.groups {
            match kind {
                FeatureKind::Numeric => cells.push((g.clone(), None, t.sum(), t.non_null)),
                FeatureKind::Labels(domain) => {
                    let mut labels: Vec<i64> = domain.clone();
                    labels.extend(t.labels.keys().filter(|l| !domain.contains(l)));
                    for l in labels {
                        let c = t.labels.get(&l).copied().unwrap_or(0);
                        cells.push((g.clone(), Some(l), c as f64, t.non_null));
                    }
                }
            }
        }
        cells
    }

    /// Applies a representation. A zero percentage denominator yields
    /// `Err(())`; callers decide whether that is an error.
    pub fn rows(&self, kind: &FeatureKind, repr: Representation) -> Result<Vec<QuantRow>, ()> {
        let cells = self.raw_cells(kind);
        let total: f64 = cells.iter().map(|c| c.2).sum();
        if repr == Representation::Percentage && total == 0.0 {
            return Err(());
        }
        cells
            .into_iter()
            .map(|(group, label, raw, non_null)| {
                let value = match repr {
                    Representation::Raw => raw,
                    Representation::Percentage => raw / total * 100.0,
                    Representation::Mean if non_null == 0 => 0.0,
                    Representation::Mean => raw / non_null as f64,
                };
                Ok(QuantRow { group, label, value })
            })
            .collect()
    }
}

pub(crate) fn corpus_tally(
    exec: Execution,
    corpus: &[Transcript],
    feature: &str,
    kind: &FeatureKind,
    group_by: GroupBy,
) -> Result<Tally, AnalysisError> {
    let parts = exec::try_map(exec, corpus, |t| {
        Tally::of_rows(t, t.utterances(), feature, kind, group_by)
    })?;
    let mut total = Tally::default();
    for p in &parts {
        total.merge(p);
    }
    Ok(total)
}

/// Sums (numeric) or label counts per group. Percentages divide by the
/// grand total over all groups; means divide by each group's non-null count.
pub fn quantitative_summary(
    corpus: &[Transcript],
    feature: &str,
    group_by: GroupBy,
    representation: Representation,
) -> Result<AnalysisReport, AnalysisError> {
    let kind = feature_kind(corpus, feature);
    quantitative_summary_with(Execution::default(), corpus, feature, &kind, group_by, representation)
}

pub fn quantitative_summary_with(
    exec: Execution,
    corpus: &[Transcript],
    feature: &str,
    kind: &FeatureKind,
    group_by: GroupBy,
    representation: Representation,
) -> Result<AnalysisReport, AnalysisError> {
    require_feature(corpus, feature)?;
    let tally = corpus_tally(exec, corpus, feature, kind, group_by)?;
    let rows = tally
        .rows(kind, representation)
        .map_err(|_| AnalysisError::ZeroTotal(feature.to_string()))?;
    Ok(AnalysisReport {
        kind: ReportKind::Quantitative,
        title: format!("{feature} ({})", representation.as_str()),
        feature: Some(feature.to_string()),
        representation: Some(representation),
        groups: tally.groups.keys().cloned().collect(),
        x_label: match (group_by, kind) {
            (_, FeatureKind::Labels(_)) => "label".into(),
            (GroupBy::Speaker, _) => "speaker".into(),
            (GroupBy::None, _) => "feature".into(),
        },
        y_label: representation.as_str().into(),
        body: ReportBody::Quantitative(rows),
    })
}
