use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::AnalysisError;

const KINDS: [&str; 4] = ["qualitative", "quantitative", "lexical", "temporal"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotSeries {
    pub name: String,
    /// Category names or bin indices.
    pub x: Vec<serde_json::Value>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotDocument {
    pub kind: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<PlotSeries>,
}

impl PlotDocument {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        let bad = |m: String| Err(AnalysisError::Config(format!("invalid plot document: {m}")));
        if !KINDS.contains(&self.kind.as_str()) {
            return bad(format!("unknown kind `{}`", self.kind));
        }
        for s in &self.series {
            if s.x.len() != s.y.len() {
                return bad(format!(
                    "series `{}` has {} x and {} y values",
                    s.name,
                    s.x.len(),
                    s.y.len()
                ));
            }
            if s.y.iter().any(|v| !v.is_finite()) {
                return bad(format!("series `{}` has a non-finite value", s.name));
            }
            if s.x.iter().any(|x| !(x.is_string() || x.is_number())) {
                return bad(format!(
                    "series `{}` has an x value that is not a string or number",
                    s.name
                ));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, AnalysisError> {
        let doc: PlotDocument =
            serde_json::from_str(text).map_err(|e| AnalysisError::Config(format!("invalid plot document: {e}")))?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plot document serializes");
        s.push('\n');
        s
    }

    /// Static chart: lines for temporal documents, grouped bars otherwise.
    pub fn to_svg(&self) -> String {
        const W: f64 = 720.0;
        const H: f64 = 420.0;
        const LEFT: f64 = 70.0;
        const RIGHT: f64 = 160.0;
        const TOP: f64 = 40.0;
        const BOTTOM: f64 = 60.0;
        const COLORS: [&str; 8] = [
            "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
        ];
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;

        let mut cats: Vec<String> = Vec::new();
        for s in &self.series {
            for x in &s.x {
                let label = x_label(x);
                if !cats.contains(&label) {
                    cats.push(label);
                }
            }
        }
        let ys = self.series.iter().flat_map(|s| s.y.iter().copied());
        let (lo, hi) = ys.fold((0.0f64, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let span = if hi - lo > 0.0 { hi - lo } else { 1.0 };
        let y_of = |v: f64| TOP + ph * (hi - v) / span;
        let slot = pw / cats.len().max(1) as f64;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}" stroke="black"/>"#,
            TOP + ph
        );
        let _ = writeln!(
            out,
            r#"<line x1="{LEFT}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#,
            y_of(0.0),
            LEFT + pw
        );
        for (v, label) in [(lo, lo), (hi, hi)] {
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                y_of(v) + 4.0,
                tick(label)
            );
        }
        for (i, c) in cats.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
                LEFT + slot * (i as f64 + 0.5),
                TOP + ph + 16.0,
                escape(c)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            H - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        let n = self.series.len().max(1) as f64;
        for (si, s) in self.series.iter().enumerate() {
            let color = COLORS[si % COLORS.len()];
            let points: Vec<(f64, f64)> =
                s.x.iter()
                    .zip(&s.y)
                    .map(|(x, y)| {
                        let i = cats.iter().position(|c| *c == x_label(x)).unwrap_or(0);
                        (i as f64, *y)
                    })
                    .collect();
            if self.kind == "temporal" {
                let path: Vec<String> = points
                    .iter()
                    .map(|(i, y)| format!("{:.2},{:.2}", LEFT + slot * (i + 0.5), y_of(*y)))
                    .collect();
                let _ = writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                    path.join(" ")
                );
            } else {
                let bw = slot * 0.8 / n;
                for (i, y) in &points {
                    let x = LEFT + slot * i + slot * 0.1 + bw * si as f64;
                    let (top, bottom) = (y_of(y.max(0.0)), y_of(y.min(0.0)));
                    let _ = writeln!(
                        out,
                        r#"<rect x="{x:.2}" y="{top:.2}" width="{bw:.2}" height="{:.2}" fill="{color}"/>"#,
                        bottom - top
                    );
                }
            }
            let ly = TOP + 14.0 * si as f64;
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
                LEFT + pw + 12.0,
                ly,
                LEFT + pw + 26.0,
                ly + 9.0,
                escape(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn x_label(x: &serde_json::Value) -> String {
    match x {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn tick(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
