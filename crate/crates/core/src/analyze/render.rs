use std::fmt::Write as _;
use std::str::FromStr;

use serde_json::json;

use super::plot::{PlotDocument, PlotSeries};
use super::quantitative::ALL;
use super::{label_display, AnalysisReport, QuantRow, ReportBody, Representation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RenderMode {
    /// Aligned terminal table.
    #[default]
    Print,
    /// Prose summary.
    Report,
    /// Plot-data document.
    PlotData,
}

impl FromStr for RenderMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "print" => Ok(RenderMode::Print),
            "report" => Ok(RenderMode::Report),
            "plot_data" | "plot-data" | "plot" => Ok(RenderMode::PlotData),
            other => Err(format!("unknown output mode `{other}` (print, report, plot_data)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rendered {
    Text(String),
    Plot(PlotDocument),
}

impl Rendered {
    /// Text as-is; plot documents as pretty JSON.
    pub fn to_text(&self) -> String {
        match self {
            Rendered::Text(t) => t.clone(),
            Rendered::Plot(p) => p.to_json(),
        }
    }
}

pub fn render(report: &AnalysisReport, mode: RenderMode) -> Rendered {
    match mode {
        RenderMode::Print => Rendered::Text(print(report)),
        RenderMode::Report => Rendered::Text(prose(report)),
        RenderMode::PlotData => Rendered::Plot(plot(report)),
    }
}

fn num(v: f64, repr: Option<Representation>) -> String {
    let s = if v.fract() == 0.0 && v.abs() < 1e15 && repr != Some(Representation::Percentage) {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    };
    if repr == Some(Representation::Percentage) {
        s + "%"
    } else {
        s
    }
}

fn precise(v: f64) -> String {
    format!("{v:.4}")
}

/// Left-aligned text columns, right-aligned where `numeric[i]`.
fn table(headers: &[&str], numeric: &[bool], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let pad = " ".repeat(widths[i] - c.chars().count());
                if numeric[i] {
                    format!("{pad}{c}")
                } else {
                    format!("{c}{pad}")
                }
            })
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut out = String::new();
    out.push_str(&line(headers.to_vec()));
    out.push('\n');
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&rule.join("  "));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

fn feature_of(report: &AnalysisReport) -> &str {
    report.feature.as_deref().unwrap_or("")
}

fn print(report: &AnalysisReport) -> String {
    let mut out = format!("{}\n\n", report.title);
    let repr = report.representation;
    match &report.body {
        ReportBody::Quantitative(rows) => {
            let labelled = rows.iter().any(|r| r.label.is_some());
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut c = vec![r.group.clone()];
                    if let Some(l) = r.label {
                        c.push(label_display(feature_of(report), l));
                    }
                    c.push(num(r.value, repr));
                    c
                })
                .collect();
            let y = report.y_label.as_str();
            if labelled {
                out.push_str(&table(&["group", "label", y], &[false, false, true], &cells));
            } else {
                out.push_str(&table(&["group", y], &[false, true], &cells));
            }
        }
        ReportBody::Qualitative(examples) => {
            if examples.is_empty() {
                out.push_str("no matching utterances\n");
            }
            for (i, e) in examples.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                let _ = writeln!(
                    out,
                    "[{}] {} row {} ({} = {})",
                    i + 1,
                    e.source_id,
                    e.row_index,
                    feature_of(report),
                    e.value
                );
                for c in &e.before {
                    let _ = writeln!(out, "    {:>4}  {}: {}", c.row_index, c.speaker, c.text);
                }
                let _ = writeln!(out, "  > {:>4}  {}: {}", e.row_index, e.speaker, e.text);
                for c in &e.after {
                    let _ = writeln!(out, "    {:>4}  {}: {}", c.row_index, c.speaker, c.text);
                }
            }
        }
        ReportBody::NgramFrequencies(tables) => {
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                let _ = writeln!(out, "{} ({} total)", t.group, t.total);
                let cells: Vec<Vec<String>> = t
                    .ranked()
                    .iter()
                    .enumerate()
                    .map(|(r, (g, c))| vec![(r + 1).to_string(), g.to_string(), c.to_string()])
                    .collect();
                out.push_str(&table(
                    &["rank", &report.x_label, "count"],
                    &[true, false, true],
                    &cells,
                ));
            }
        }
        ReportBody::LogOdds {
            group_a,
            group_b,
            result,
        } => {
            let _ = writeln!(
                out,
                "{group_a}: {} tokens, {group_b}: {} tokens, prior mass {}\n",
                result.n_a,
                result.n_b,
                num(result.alpha0, None)
            );
            let cells: Vec<Vec<String>> = result
                .entries
                .iter()
                .enumerate()
                .map(|(r, e)| {
                    vec![
                        (r + 1).to_string(),
                        e.ngram.clone(),
                        e.count_a.to_string(),
                        e.count_b.to_string(),
                        precise(e.delta),
                        precise(e.z),
                    ]
                })
                .collect();
            out.push_str(&table(
                &["rank", &report.x_label, group_a, group_b, "delta", "z"],
                &[true, false, true, true, true, true],
                &cells,
            ));
        }
        ReportBody::Temporal { num_bins, series, .. } => {
            let mut headers = vec!["series".to_string()];
            headers.extend((0..*num_bins).map(|b| format!("bin {b}")));
            let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
            let mut numeric = vec![true; headers.len()];
            numeric[0] = false;
            let cells: Vec<Vec<String>> = series
                .iter()
                .map(|s| {
                    let mut c = vec![s.name(feature_of(report))];
                    c.extend(s.values.iter().map(|v| num(*v, repr)));
                    c
                })
                .collect();
            out.push_str(&table(&header_refs, &numeric, &cells));
        }
    }
    out
}

fn join_and(parts: &[String]) -> String {
    match parts {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

fn prose(report: &AnalysisReport) -> String {
    let feature = feature_of(report);
    let repr = report.representation;
    let text = match &report.body {
        ReportBody::Quantitative(rows) => {
            let mode = repr.map(Representation::as_str).unwrap_or("raw");
            let parts: Vec<String> = rows
                .iter()
                .map(|r| match (r.label, r.group.as_str()) {
                    (Some(l), ALL) => format!("label {} at {}", label_display(feature, l), num(r.value, repr)),
                    (Some(l), g) => format!("{g} with label {} at {}", label_display(feature, l), num(r.value, repr)),
                    (None, g) => format!("{g} at {}", num(r.value, repr)),
                })
                .collect();
            if parts.is_empty() {
                format!("No values of {feature} were found.")
            } else if let [QuantRow {
                label: None,
                group,
                value,
            }] = rows.as_slice()
            {
                let what = match repr {
                    Some(Representation::Mean) => "mean",
                    Some(Representation::Percentage) => "share",
                    _ => "total",
                };
                let whose = if group == ALL {
                    String::new()
                } else {
                    format!(" for {group}")
                };
                format!("The {what} of {feature}{whose} is {}.", num(*value, repr))
            } else {
                format!("For {feature} ({mode}), the values are {}.", join_and(&parts))
            }
        }
        ReportBody::Qualitative(examples) => {
            let mut s = format!(
                "Found {} example{} of {}.",
                examples.len(),
                if examples.len() == 1 { "" } else { "s" },
                report.title
            );
            for e in examples {
                let _ = write!(
                    s,
                    " In {} at row {}, {} said \"{}\"",
                    e.source_id, e.row_index, e.speaker, e.text
                );
                if let Some(p) = e.before.last() {
                    let _ = write!(s, ", following {}'s \"{}\"", p.speaker, p.text);
                }
                s.push('.');
            }
            s
        }
        ReportBody::NgramFrequencies(tables) => {
            let parts: Vec<String> = tables
                .iter()
                .map(|t| {
                    let top: Vec<String> = t.ranked().iter().map(|(g, c)| format!("\"{g}\" ({c})")).collect();
                    if top.is_empty() {
                        format!("{} produced no {}s.", t.group, report.x_label)
                    } else {
                        format!(
                            "Among {} {}s from {}, the most frequent are {}.",
                            t.total,
                            report.x_label,
                            t.group,
                            join_and(&top)
                        )
                    }
                })
                .collect();
            parts.join(" ")
        }
        ReportBody::LogOdds {
            group_a,
            group_b,
            result,
        } => {
            let top: Vec<String> = result
                .entries
                .iter()
                .map(|e| format!("\"{}\" (z = {:.2})", e.ngram, e.z))
                .collect();
            if top.is_empty() {
                format!("No {}s were scored for {group_a} against {group_b}.", report.x_label)
            } else {
                format!(
                    "Relative to {group_b}, the {}s most characteristic of {group_a} are {}. Positive z favours {group_a}; negative z favours {group_b}.",
                    report.x_label,
                    join_and(&top)
                )
            }
        }
        ReportBody::Temporal { num_bins, series, .. } => {
            let mut s = format!("{feature} was split into {num_bins} bins.");
            for ser in series {
                let (mut lo, mut hi) = (0, 0);
                for (i, v) in ser.values.iter().enumerate() {
                    if *v > ser.values[hi] {
                        hi = i;
                    }
                    if *v < ser.values[lo] {
                        lo = i;
                    }
                }
                if ser.values.is_empty() {
                    continue;
                }
                let _ = write!(
                    s,
                    " {} peaks in bin {hi} ({}) and is lowest in bin {lo} ({}).",
                    ser.name(feature),
                    num(ser.values[hi], repr),
                    num(ser.values[lo], repr)
                );
            }
            s
        }
    };
    text + "\n"
}

fn plot(report: &AnalysisReport) -> PlotDocument {
    let feature = feature_of(report);
    let series = match &report.body {
        ReportBody::Quantitative(rows) => {
            if rows.iter().all(|r| r.label.is_none()) {
                vec![PlotSeries {
                    name: feature.to_string(),
                    x: rows.iter().map(|r| json!(r.group)).collect(),
                    y: rows.iter().map(|r| r.value).collect(),
                }]
            } else {
                let mut out: Vec<PlotSeries> = Vec::new();
                for r in rows {
                    if out.last().map(|s| s.name != r.group).unwrap_or(true) {
                        out.push(PlotSeries {
                            name: r.group.clone(),
                            x: Vec::new(),
                            y: Vec::new(),
                        });
                    }
                    let s = out.last_mut().expect("pushed above");
                    s.x.push(json!(label_display(feature, r.label.unwrap_or_default())));
                    s.y.push(r.value);
                }
                out
            }
        }
        ReportBody::Qualitative(examples) => {
            let mut out: Vec<PlotSeries> = Vec::new();
            for e in examples {
                if out.last().map(|s| s.name != e.source_id).unwrap_or(true) {
                    out.push(PlotSeries {
                        name: e.source_id.clone(),
                        x: Vec::new(),
                        y: Vec::new(),
                    });
                }
                let s = out.last_mut().expect("pushed above");
                s.x.push(json!(e.row_index));
                s.y.push(e.value.as_f64().unwrap_or(1.0));
            }
            out
        }
        ReportBody::NgramFrequencies(tables) => tables
            .iter()
            .map(|t| {
                let ranked = t.ranked();
                PlotSeries {
                    name: t.group.clone(),
                    x: ranked.iter().map(|(g, _)| json!(g)).collect(),
                    y: ranked.iter().map(|(_, c)| *c as f64).collect(),
                }
            })
            .collect(),
        ReportBody::LogOdds { result, .. } => vec![PlotSeries {
            name: "z".into(),
            x: result.entries.iter().map(|e| json!(e.ngram)).collect(),
            y: result.entries.iter().map(|e| e.z).collect(),
        }],
        ReportBody::Temporal { series, .. } => series
            .iter()
            .map(|s| PlotSeries {
                name: s.name(feature),
                x: (0..s.values.len()).map(|b| json!(b)).collect(),
                y: s.values.clone(),
            })
            .collect(),
    };
    PlotDocument {
        kind: report.kind.as_str().to_string(),
        title: report.title.clone(),
        x_label: report.x_label.clone(),
        y_label: report.y_label.clone(),
        series,
    }
}
