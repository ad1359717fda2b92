use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;

use super::{AnalysisError, AnalysisReport, ReportBody, ReportKind};
use crate::corpus::{words, Transcript};
use crate::exec::{self, Execution};

/// A named set of speakers whose utterances are pooled.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct SpeakerGroup {
    pub name: String,
    pub speakers: BTreeSet<String>,
}

impl SpeakerGroup {
    pub fn new<I, S>(name: impl Into<String>, speakers: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        SpeakerGroup {
            name: name.into(),
            speakers: speakers.into_iter().map(Into::into).collect(),
        }
    }
}

pub type NgramCounts = BTreeMap<String, u64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramTable {
    pub group: String,
    pub counts: NgramCounts,
    /// Total n-gram tokens, including any dropped by truncation.
    pub total: u64,
}

impl NgramTable {
    /// Most frequent first; ties in lexicographic order.
    pub fn ranked(&self) -> Vec<(&str, u64)> {
        let mut v: Vec<(&str, u64)> = self.counts.iter().map(|(k, c)| (k.as_str(), *c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }
}

/// Sliding window of `n` tokens joined by single spaces.
pub fn ngrams(tokens: &[String], n: usize) -> Vec<String> {
    if n == 0 || tokens.len() < n {
        return Vec::new();
    }
    tokens.windows(n).map(|w| w.join(" ")).collect()
}

fn validate_groups(n: usize, groups: &[SpeakerGroup]) -> Result<(), AnalysisError> {
    if n == 0 {
        return Err(AnalysisError::Config("n-gram length must be at least 1".into()));
    }
    if groups.is_empty() {
        return Err(AnalysisError::Config("at least one speaker group is required".into()));
    }
    if let Some(g) = groups.iter().find(|g| g.speakers.is_empty()) {
        return Err(AnalysisError::Config(format!(
            "speaker group `{}` has no speakers",
            g.name
        )));
    }
    Ok(())
}

fn transcript_counts(t: &Transcript, n: usize, groups: &[SpeakerGroup]) -> Vec<NgramCounts> {
    let mut out = vec![NgramCounts::new(); groups.len()];
    for u in t.utterances() {
        let members: Vec<usize> = (0..groups.len())
            .filter(|&i| groups[i].speakers.contains(&u.speaker))
            .collect();
        if members.is_empty() {
            continue;
        }
        for g in ngrams(&words::tokens(&u.text), n) {
            for &i in &members {
                *out[i].entry(g.clone()).or_default() += 1;
            }
        }
    }
    out
}

/// Per-group n-gram counts. N-grams never span two utterances; a speaker in
/// several groups counts toward each.
pub fn ngram_counts(
    corpus: &[Transcript],
    n: usize,
    groups: &[SpeakerGroup],
) -> Result<Vec<NgramTable>, AnalysisError> {
    ngram_counts_with(Execution::default(), corpus, n, groups)
}

pub fn ngram_counts_with(
    exec: Execution,
    corpus: &[Transcript],
    n: usize,
    groups: &[SpeakerGroup],
) -> Result<Vec<NgramTable>, AnalysisError> {
    validate_groups(n, groups)?;
    let parts = exec::map(exec, corpus, |t| transcript_counts(t, n, groups));
    let mut tables: Vec<NgramTable> = groups
        .iter()
        .map(|g| NgramTable {
            group: g.name.clone(),
            counts: NgramCounts::new(),
            total: 0,
        })
        .collect();
    for part in parts {
        for (table, counts) in tables.iter_mut().zip(part) {
            for (k, c) in counts {
                table.total += c;
                *table.counts.entry(k).or_default() += c;
            }
        }
    }
    Ok(tables)
}

/// Informative Dirichlet prior. `None` fields default to the combined
/// counts of both groups and their token total.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Prior {
    pub background: Option<NgramCounts>,
    pub prior_mass: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogOddsEntry {
    pub ngram: String,
    pub count_a: u64,
    pub count_b: u64,
    pub alpha: f64,
    pub delta: f64,
    pub variance: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogOddsResult {
    pub n_a: u64,
    pub n_b: u64,
    pub alpha0: f64,
    /// Sorted by `z` descending, ties by n-gram.
    pub entries: Vec<LogOddsEntry>,
}

pub fn log_odds(a: &NgramCounts, b: &NgramCounts, prior: &Prior, top_k: usize) -> Result<LogOddsResult, AnalysisError> {
    log_odds_with(Execution::default(), a, b, prior, top_k)
}

/// Weighted log-odds ratio of group A over group B with an informative
/// Dirichlet prior; positive `z` marks n-grams characteristic of A.
pub fn log_odds_with(
    exec: Execution,
    a: &NgramCounts,
    b: &NgramCounts,
    prior: &Prior,
    top_k: usize,
) -> Result<LogOddsResult, AnalysisError> {
    let n_a: u64 = a.values().sum();
    let n_b: u64 = b.values().sum();
    let combined;
    let background = match &prior.background {
        Some(bg) => bg,
        None => {
            let mut c = a.clone();
            for (k, v) in b {
                *c.entry(k.clone()).or_default() += v;
            }
            combined = c;
            &combined
        }
    };
    let bg_total: u64 = background.values().sum();
    let alpha0 = prior.prior_mass.unwrap_or((n_a + n_b) as f64);
    if !(alpha0.is_finite() && alpha0 > 0.0) {
        return Err(AnalysisError::Config(format!(
            "prior mass must be positive, got {alpha0}"
        )));
    }

    let vocab: Vec<&String> = a
        .iter()
        .chain(b)
        .filter(|(_, c)| **c > 0)
        .map(|(k, _)| k)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if let Some(w) = vocab.iter().find(|w| background.get(**w).copied().unwrap_or(0) == 0) {
        return Err(AnalysisError::MissingBackground((*w).clone()));
    }

    let (na, nb) = (n_a as f64, n_b as f64);
    let scored = exec::try_map(exec, &vocab, |w| {
        let ya = a.get(*w).copied().unwrap_or(0);
        let yb = b.get(*w).copied().unwrap_or(0);
        let alpha = alpha0 * background[*w] as f64 / bg_total as f64;
        let (pa, pb) = (ya as f64 + alpha, yb as f64 + alpha);
        let (qa, qb) = (na + alpha0 - pa, nb + alpha0 - pb);
        if !(qa > 0.0 && qb > 0.0) {
            return Err(AnalysisError::Config(format!(
                "log-odds undefined for `{w}`: the prior leaves no mass outside it"
            )));
        }
        let delta = (pa.ln() - qa.ln()) - (pb.ln() - qb.ln());
        let variance = 1.0 / pa + 1.0 / pb;
        Ok(LogOddsEntry {
            ngram: (*w).clone(),
            count_a: ya,
            count_b: yb,
            alpha,
            delta,
            variance,
            z: delta / variance.sqrt(),
        })
    })?;

    let mut entries = scored;
    entries.sort_by(|x, y| y.z.total_cmp(&x.z).then_with(|| x.ngram.cmp(&y.ngram)));
    entries.truncate(top_k);
    Ok(LogOddsResult {
        n_a,
        n_b,
        alpha0,
        entries,
    })
}

/// Frequency report keeping each table's `top_k` most frequent n-grams.
pub fn ngram_frequency_report(tables: Vec<NgramTable>, n: usize, top_k: usize) -> AnalysisReport {
    let groups = tables.iter().map(|t| t.group.clone()).collect();
    let tables = tables
        .into_iter()
        .map(|t| {
            let counts = t
                .ranked()
                .into_iter()
                .take(top_k)
                .map(|(k, c)| (k.to_string(), c))
                .collect();
            NgramTable { counts, ..t }
        })
        .collect();
    AnalysisReport {
        kind: ReportKind::Lexical,
        title: format!("most frequent {n}-grams"),
        feature: None,
        representation: None,
        groups,
        x_label: format!("{n}-gram"),
        y_label: "count".into(),
        body: ReportBody::NgramFrequencies(tables),
    }
}

pub fn log_odds_report(group_a: &str, group_b: &str, n: usize, result: LogOddsResult) -> AnalysisReport {
    AnalysisReport {
        kind: ReportKind::Lexical,
        title: format!("{n}-grams distinguishing {group_a} from {group_b} (weighted log-odds)"),
        feature: None,
        representation: None,
        groups: vec![group_a.to_string(), group_b.to_string()],
        x_label: format!("{n}-gram"),
        y_label: "z".into(),
        body: ReportBody::LogOdds {
            group_a: group_a.to_string(),
            group_b: group_b.to_string(),
            result,
        },
    }
}
