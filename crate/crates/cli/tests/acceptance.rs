//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Tolerances and time limits are fixed below.

// `ensure!(x <= tol)` is written so that NaN fails.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[path = "../../core/tests/common/mock.rs"]
mod mock;
#[path = "../../core/tests/common/oracle.rs"]
mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use classtalk_core::analyze::{
    bin_edges, log_odds, ngram_counts, quantitative_summary, temporal_profile, BinSpec, GroupBy, NgramCounts, Prior,
    ReportBody, Representation, SpeakerGroup,
};
use classtalk_core::annotate::{
    builtin_feature, compute_gate, Annotator, ClassifierAccess, Role, RoleMap, STUDENT_REASONING, UPTAKE,
};
use classtalk_core::corpus::write_csv;
use classtalk_core::inference::{HttpClassifier, Limits, PrecomputedLabels, Prediction};
use classtalk_core::llm::{truncate_lines, Budget, TRUNCATION_MARKER};
use classtalk_core::preprocess::{deidentify, merge_consecutive, DeidOptions, Roster, RosterEntry};
use classtalk_core::{Transcript, Utterance, Value, ValueDomain};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_611;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

// ---------------------------------------------------------------- de-id

const NAME_PARTS: &[&str] = &["jo", "an", "li", "ma", "ria", "son", "el", "ka", "tom", "ben", "é", "ö"];
const FILLER: &[&str] = &[
    "the", "said", "hi", "to", "and", "we", "add", "half", "ok", "yes", "2", "x9",
];
const SEPARATORS: &[&str] = &[" ", " ", " ", ", ", ". ", "? ", "'s ", " (", ") ", "-", "\n", "’"];

fn random_name(rng: &mut ChaCha8Rng) -> String {
    let parts = rng.gen_range(1..=3);
    let mut s: String = (0..parts).map(|_| *NAME_PARTS.choose(rng).unwrap()).collect();
    if rng.gen_bool(0.5) {
        let mut c = s.chars();
        let first = c.next().unwrap();
        s = first.to_uppercase().chain(c).collect();
    }
    s
}

fn random_roster(rng: &mut ChaCha8Rng) -> Roster {
    let people = rng.gen_range(1..=4);
    let mut used = BTreeSet::new();
    let mut entries = Vec::new();
    for p in 0..people {
        let mut variants = Vec::new();
        for _ in 0..rng.gen_range(1..=3) {
            let v = if rng.gen_bool(0.3) {
                format!("{} {}", random_name(rng), random_name(rng))
            } else {
                random_name(rng)
            };
            if used.insert(v.to_lowercase()) {
                variants.push(v);
            }
        }
        if !variants.is_empty() {
            entries.push(RosterEntry::new(variants, format!("[STUDENT_{p}]")));
        }
    }
    Roster::new(entries).expect("generated roster is valid")
}

fn random_text(rng: &mut ChaCha8Rng, roster: &Roster) -> String {
    let variants: Vec<&str> = roster
        .entries
        .iter()
        .flat_map(|e| e.name_variants.iter().map(String::as_str))
        .collect();
    let mut s = String::new();
    for _ in 0..rng.gen_range(1..=14) {
        let token = match rng.gen_range(0..10) {
            0..=3 => variants.choose(rng).unwrap().to_string(),
            // Variants glued to other word characters must stay.
            4 => format!("{}{}", variants.choose(rng).unwrap(), FILLER.choose(rng).unwrap()),
            5 => format!("{}{}", FILLER.choose(rng).unwrap(), variants.choose(rng).unwrap()),
            6 => variants.choose(rng).unwrap().to_uppercase(),
            _ => FILLER.choose(rng).unwrap().to_string(),
        };
        s.push_str(&token);
        s.push_str(SEPARATORS.choose(rng).unwrap());
    }
    s
}

fn is_boundary(chars: &[char], at: usize) -> bool {
    at == 0 || at == chars.len() || chars[at - 1].is_alphanumeric() != chars[at].is_alphanumeric()
}

fn fold(c: char) -> String {
    c.to_lowercase().collect()
}

/// Brute force: does `needle` occur in `hay` (case-insensitive) with word
/// boundaries on both ends?
fn has_whole_word(hay: &str, needle: &str) -> bool {
    let h: Vec<char> = hay.chars().collect();
    let n: Vec<char> = needle.chars().collect();
    (0..h.len()).any(|i| {
        i + n.len() <= h.len()
            && is_boundary(&h, i)
            && is_boundary(&h, i + n.len())
            && h[i..i + n.len()].iter().zip(&n).all(|(a, b)| fold(*a) == fold(*b))
    })
}

fn check_deid() -> Check {
    let roster = Roster::new(vec![RosterEntry::new(["John Paul", "John"], "[STUDENT_0]")]).unwrap();
    let t = Transcript::from_pairs("fig", [("T", "John said hi to Johnson.")]);
    let (out, _) = deidentify(&t, &roster, DeidOptions::default());
    ensure!(
        out.utterances()[0].text == "[STUDENT_0] said hi to Johnson.",
        "example gave {:?}",
        out.utterances()[0].text
    );

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut surviving, mut inside, mut replaced) = (0, 0, 0);
    for case in 0..1000 {
        let roster = random_roster(&mut rng);
        let text = random_text(&mut rng, &roster);
        let t = Transcript::from_pairs("fuzz", [("S", text.as_str())]);
        let (out, report) = deidentify(&t, &roster, DeidOptions::default());
        let result = &out.utterances()[0].text;
        for e in &roster.entries {
            for v in &e.name_variants {
                if has_whole_word(result, v) {
                    surviving += 1;
                    if surviving == 1 {
                        eprintln!("case {case}: `{v}` survives in {result:?} (from {text:?})");
                    }
                }
            }
        }
        let chars: Vec<char> = text.chars().collect();
        for r in &report.replacements {
            replaced += 1;
            let start = text[..r.span_start].chars().count();
            let end = start + text[r.span_start..r.span_end].chars().count();
            let same = text[r.span_start..r.span_end].to_lowercase() == r.matched_variant.to_lowercase();
            if !(is_boundary(&chars, start) && is_boundary(&chars, end) && same) {
                inside += 1;
                if inside == 1 {
                    eprintln!("case {case}: replacement {r:?} is not a whole word in {text:?}");
                }
            }
        }
    }
    ensure!(
        surviving == 0 && inside == 0,
        "{surviving} surviving variants, {inside} inside-word replacements"
    );
    Ok(format!(
        "example exact; 1000 fuzz cases, {replaced} replacements, 0 survivors, 0 inside-word"
    ))
}

// ---------------------------------------------------------------- merge

fn check_merge() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let speakers = ["T", "A", "B"];
    for case in 0..500 {
        let rows = rng.gen_range(0..=50);
        let pairs: Vec<(String, String)> = (0..rows)
            .map(|i| {
                let s = speakers[rng.gen_range(0..speakers.len())];
                let words = rng.gen_range(0..5);
                let text = (0..words).map(|w| format!("w{i}_{w}")).collect::<Vec<_>>().join(" ");
                (s.to_string(), text)
            })
            .collect();
        let t = Transcript::from_pairs(format!("m{case}"), pairs);
        let once = merge_consecutive(&t, " ");
        let twice = merge_consecutive(&once, " ");
        ensure!(once == twice, "case {case}: merge is not idempotent");
        let u = once.utterances();
        ensure!(
            u.windows(2).all(|w| w[0].speaker != w[1].speaker),
            "case {case}: consecutive equal speakers remain"
        );
        let join = |t: &Transcript| {
            t.utterances()
                .iter()
                .map(|u| u.text.as_str())
                .collect::<Vec<_>>()
                .join(" ")
        };
        ensure!(join(&t) == join(&once), "case {case}: text not conserved");
    }
    Ok("500 transcripts: idempotent, no repeated speakers, text conserved".into())
}

// ---------------------------------------------------------------- gating

fn words(n: usize) -> String {
    vec!["word"; n].join(" ")
}

fn check_gating() -> Check {
    const COUNTS: [usize; 6] = [0, 4, 5, 7, 8, 9];
    let roles: RoleMap = [("T", Role::Teacher), ("S", Role::Student)].into_iter().collect();
    let reasoning = builtin_feature(STUDENT_REASONING)
        .unwrap()
        .gate
        .resolve(&roles, STUDENT_REASONING)
        .unwrap();
    let uptake = builtin_feature(UPTAKE).unwrap().gate.resolve(&roles, UPTAKE).unwrap();
    let texts: Vec<String> = COUNTS.iter().map(|&n| words(n)).collect();

    // Brute-force predicates written out from the rule definitions.
    let reasoning_oracle = |rows: &[(usize, usize)], i: usize| rows[i].0 == 1 && COUNTS[rows[i].1] >= 8;
    let uptake_oracle =
        |rows: &[(usize, usize)], i: usize| rows[i].0 == 0 && i > 0 && rows[i - 1].0 == 1 && COUNTS[rows[i - 1].1] >= 5;

    let options = 2 * COUNTS.len();
    let mut transcripts = 0u64;
    for len in 0..=6u32 {
        for code in 0..options.pow(len) {
            let mut c = code;
            let rows: Vec<(usize, usize)> = (0..len)
                .map(|_| {
                    let cell = c % options;
                    c /= options;
                    (cell / COUNTS.len(), cell % COUNTS.len())
                })
                .collect();
            let utterances: Vec<Utterance> = rows
                .iter()
                .map(|&(s, w)| Utterance::new(if s == 0 { "T" } else { "S" }, texts[w].clone()))
                .collect();
            let t = Transcript::new("g", Default::default(), utterances);
            let r = compute_gate(&t, &reasoning);
            let u = compute_gate(&t, &uptake);
            for i in 0..rows.len() {
                ensure!(
                    r[i] == reasoning_oracle(&rows, i),
                    "reasoning differs at {rows:?} row {i}"
                );
                ensure!(u[i] == uptake_oracle(&rows, i), "uptake differs at {rows:?} row {i}");
            }
            transcripts += 1;
        }
    }
    Ok(format!("{transcripts} transcripts x 2 rules match brute force"))
}

// ---------------------------------------------------------------- log-odds

const LOG_ODDS_VOCAB: &[&str] = &["one", "half", "add", "we", "it's", "more", "angle", "x"];

fn check_log_odds() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let groups = [
        SpeakerGroup::new("students", ["S1", "S2"]),
        SpeakerGroup::new("teacher", ["T"]),
    ];
    let mut worst = 0.0f64;
    let mut corpora = 0;
    let mut zero_checked = 0;
    while corpora < 100 {
        let total = rng.gen_range(2..=50);
        let width = rng.gen_range(2..=LOG_ODDS_VOCAB.len());
        let mut rows = Vec::new();
        let mut expected: [NgramCounts; 2] = Default::default();
        let mut left = total;
        while left > 0 {
            let speaker = ["S1", "S2", "T"][rng.gen_range(0..3)];
            let n = rng.gen_range(1..=left.min(8));
            left -= n;
            let toks: Vec<&str> = (0..n).map(|_| LOG_ODDS_VOCAB[rng.gen_range(0..width)]).collect();
            for tok in &toks {
                *expected[usize::from(speaker == "T")]
                    .entry(tok.to_string())
                    .or_default() += 1;
            }
            rows.push((speaker.to_string(), format!("{}.", toks.join(", "))));
        }
        let combined: BTreeSet<&String> = expected[0].keys().chain(expected[1].keys()).collect();
        if expected[0].is_empty() || expected[1].is_empty() || combined.len() < 2 {
            continue;
        }
        let t = Transcript::from_pairs(format!("c{corpora}"), rows);
        let tables = ngram_counts(std::slice::from_ref(&t), 1, &groups).map_err(|e| e.to_string())?;
        ensure!(
            tables[0].counts == expected[0] && tables[1].counts == expected[1],
            "token counts differ"
        );
        let (a, b) = (&tables[0].counts, &tables[1].counts);

        let mass = rng.gen_bool(0.5).then(|| rng.gen_range(1..=80u64));
        let prior = Prior {
            background: None,
            prior_mass: mass.map(|m| m as f64),
        };
        let ab = log_odds(a, b, &prior, usize::MAX).map_err(|e| e.to_string())?;
        let ba = log_odds(b, a, &prior, usize::MAX).map_err(|e| e.to_string())?;
        let exact = oracle::log_odds(a, b, None, mass);
        ensure!(ab.entries.len() == exact.len(), "corpus {corpora}: entry count");
        let reversed: BTreeMap<&str, f64> = ba.entries.iter().map(|e| (e.ngram.as_str(), e.z)).collect();
        for e in &ab.entries {
            let o = exact[&e.ngram].z.to_f64();
            worst = worst.max((e.z - o).abs());
            ensure!(
                (e.z - o).abs() <= 1e-9,
                "corpus {corpora} `{}`: z {} vs oracle {}",
                e.ngram,
                e.z,
                o
            );
            ensure!(
                (e.z + reversed[e.ngram.as_str()]).abs() <= 1e-12,
                "swap not negated for `{}`",
                e.ngram
            );
        }

        let mut both = a.clone();
        for (k, v) in b {
            *both.entry(k.clone()).or_default() += v;
        }
        let same = log_odds(&both, &both, &prior, usize::MAX).map_err(|e| e.to_string())?;
        ensure!(
            same.entries.iter().all(|e| e.z == 0.0),
            "identical groups gave a non-zero z"
        );
        zero_checked += same.entries.len();
        corpora += 1;
    }
    Ok(format!(
        "100 corpora: max |z - oracle| = {worst:.1e}; {zero_checked} identical-group z exactly 0"
    ))
}

// ---------------------------------------------------------------- quantitative and temporal

fn annotated(len: usize, rng: &mut ChaCha8Rng) -> Transcript {
    let speakers = ["T", "A", "B"];
    let rows: Vec<(String, String)> = (0..len)
        .map(|i| (speakers[rng.gen_range(0..3)].to_string(), format!("row {i}")))
        .collect();
    let words: Vec<Value> = (0..len).map(|_| Value::Int(rng.gen_range(0..12))).collect();
    let labels: Vec<Value> = (0..len)
        .map(|_| {
            if rng.gen_bool(0.2) {
                Value::Null
            } else {
                Value::Int(rng.gen_range(0..7))
            }
        })
        .collect();
    Transcript::from_pairs("q", rows)
        .with_feature("talktime_words", ValueDomain::Numeric, words)
        .and_then(|t| t.with_feature("teacher_talk_moves", ValueDomain::Labels((0..7).collect()), labels))
        .expect("columns match rows")
}

fn sum_ok(values: &[f64]) -> bool {
    (values.iter().sum::<f64>() - 100.0).abs() <= 1e-9
}

fn check_quant_temporal() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let mut pct_scopes = 0;
    let mut pairs = 0;
    for len in 0..=30usize {
        let t = annotated(len, &mut rng);
        let corpus = std::slice::from_ref(&t);
        for feature in ["talktime_words", "teacher_talk_moves"] {
            for group_by in [GroupBy::None, GroupBy::Speaker] {
                match quantitative_summary(corpus, feature, group_by, Representation::Percentage) {
                    Ok(r) => {
                        let ReportBody::Quantitative(rows) = &r.body else {
                            return Err("wrong body".into());
                        };
                        let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
                        ensure!(
                            sum_ok(&values),
                            "L={len} {feature}: percentages sum to {}",
                            values.iter().sum::<f64>()
                        );
                        pct_scopes += 1;
                    }
                    Err(classtalk_core::analyze::AnalysisError::ZeroTotal(_)) => {}
                    Err(e) => return Err(e.to_string()),
                }
            }
        }
        let whole: i64 = t.feature_values("talktime_words").filter_map(Value::as_label).sum();
        for b in 1..=10usize {
            let spec = BinSpec::new(b).unwrap();
            let edges = bin_edges(len, spec);
            ensure!(edges.len() == b, "L={len} B={b}: {} bins", edges.len());
            ensure!(
                edges[0].0 == 0 && edges[b - 1].1 == len,
                "L={len} B={b}: bins do not span [0, L)"
            );
            ensure!(
                edges.windows(2).all(|w| w[0].1 == w[1].0),
                "L={len} B={b}: bins overlap or leave gaps"
            );
            ensure!(edges.iter().all(|e| e.0 <= e.1), "L={len} B={b}: inverted bin");

            let raw = temporal_profile(&t, "talktime_words", spec, GroupBy::Speaker, Representation::Raw)
                .map_err(|e| e.to_string())?;
            let ReportBody::Temporal { series, .. } = &raw.body else {
                return Err("wrong body".into());
            };
            let binned: f64 = series.iter().flat_map(|s| s.values.iter()).sum();
            ensure!(
                binned == whole as f64,
                "L={len} B={b}: bins sum to {binned}, transcript {whole}"
            );

            let pct = temporal_profile(
                &t,
                "teacher_talk_moves",
                spec,
                GroupBy::None,
                Representation::Percentage,
            )
            .map_err(|e| e.to_string())?;
            let ReportBody::Temporal { series, .. } = &pct.body else {
                return Err("wrong body".into());
            };
            for (i, (lo, hi)) in edges.iter().enumerate() {
                let col: Vec<f64> = series.iter().map(|s| s.values[i]).collect();
                let labelled = t.utterances()[*lo..*hi]
                    .iter()
                    .any(|u| !u.get("teacher_talk_moves").is_null());
                if labelled {
                    ensure!(
                        sum_ok(&col),
                        "L={len} B={b} bin {i}: percentages sum to {}",
                        col.iter().sum::<f64>()
                    );
                    pct_scopes += 1;
                }
            }
            pairs += 1;
        }
    }
    Ok(format!(
        "{pairs} (L, B) pairs partition exactly; {pct_scopes} percentage scopes sum to 100"
    ))
}

// ---------------------------------------------------------------- classifier

fn classifier_corpus(rng: &mut ChaCha8Rng) -> Vec<Transcript> {
    let speakers = ["T", "S1", "S2"];
    (0..12)
        .map(|k| {
            let rows = rng.gen_range(0..=30);
            let pairs: Vec<(String, String)> = (0..rows)
                .map(|_| {
                    let s = speakers[rng.gen_range(0..3)];
                    (s.to_string(), words(rng.gen_range(0..=12)))
                })
                .collect();
            Transcript::from_pairs(format!("lesson{k}"), pairs)
        })
        .collect()
}

fn csv_bytes(t: &Transcript) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(t, &mut buf).unwrap();
    buf
}

fn check_classifier() -> Check {
    let features: Vec<String> = [
        "student_reasoning",
        "focusing_question",
        "teacher_talk_moves",
        "student_talk_moves",
        "uptake",
    ]
    .map(String::from)
    .to_vec();
    let roles: RoleMap = [("T", Role::Teacher), ("S1", Role::Student), ("S2", Role::Student)]
        .into_iter()
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let corpus = classifier_corpus(&mut rng);
    let mock = mock::MockClassifier::start();

    let mut reference: Option<Vec<Vec<u8>>> = None;
    let mut live = Vec::new();
    for max_batch in [1, 2, 7, 32] {
        let before = mock.call_count();
        let limits = Limits {
            max_batch,
            timeout: Duration::from_secs(5),
            retries: 1,
            backoff: Duration::from_millis(1),
        };
        let annotator = Annotator {
            roles: roles.clone(),
            classifier: Some(ClassifierAccess::new(HttpClassifier::new(&mock.url, limits)).map_err(|e| e.to_string())?),
            ..Annotator::default()
        };
        annotator.check(&features).map_err(|e| e.to_string())?;
        let out: Vec<Transcript> = corpus
            .iter()
            .map(|t| annotator.annotate_all(t, &features))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let sizes = &mock.batch_sizes()[before..];
        ensure!(
            sizes.iter().all(|&n| n >= 1 && n <= max_batch),
            "max_batch {max_batch}: batch sizes {sizes:?}"
        );

        for t in &out {
            for f in &features {
                let spec = annotator.spec(f).unwrap();
                let gate = compute_gate(t, &spec.gate.resolve(&roles, f).unwrap());
                for (u, open) in t.utterances().iter().zip(gate) {
                    ensure!(
                        u.get(f).is_null() != open,
                        "{} row {} {f}: null placement",
                        t.source_id(),
                        u.row_index
                    );
                    if open {
                        let (label, _) = mock::label_for(f, &u.text);
                        ensure!(
                            u.get(f) == &Value::Int(label),
                            "{} row {} {f}: label mismatch",
                            t.source_id(),
                            u.row_index
                        );
                    }
                }
            }
        }
        let bytes: Vec<Vec<u8>> = out.iter().map(csv_bytes).collect();
        match &reference {
            None => reference = Some(bytes),
            Some(r) => ensure!(r == &bytes, "max_batch {max_batch} output differs from max_batch 1"),
        }
        live = out;
    }

    let mut labels = PrecomputedLabels::default();
    for t in &live {
        for f in &features {
            for u in t.utterances() {
                if let (Value::Int(label), Some(score)) = (u.get(f), u.get(&format!("{f}_score")).as_f64()) {
                    labels.insert(f, t.source_id(), u.row_index, Prediction { label: *label, score });
                }
            }
        }
    }
    let mut file = Vec::new();
    labels.write_csv(&mut file).map_err(|e| e.to_string())?;
    let replay =
        PrecomputedLabels::from_reader(file.as_slice(), Path::new("labels.csv"), None).map_err(|e| e.to_string())?;
    let offline = Annotator {
        roles: roles.clone(),
        classifier: Some(ClassifierAccess::new(replay).map_err(|e| e.to_string())?),
        ..Annotator::default()
    };
    for (t, online) in corpus.iter().zip(&live) {
        let again = offline.annotate_all(t, &features).map_err(|e| e.to_string())?;
        ensure!(
            csv_bytes(&again) == csv_bytes(online),
            "{}: precomputed output differs",
            t.source_id()
        );
    }
    Ok(format!(
        "{} transcripts x 5 features; max_batch 1/2/7/32 identical; nulls follow gates; precomputed byte-identical",
        corpus.len()
    ))
}

// ---------------------------------------------------------------- truncation

fn check_truncation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let marker = TRUNCATION_MARKER.chars().count();
    for case in 0..200 {
        let lines: Vec<String> = (0..rng.gen_range(0..25))
            .map(|i| {
                let n = rng.gen_range(0..60);
                let body: String = (0..n)
                    .map(|_| *['a', 'é', ' ', '7', '字'].choose(&mut rng).unwrap())
                    .collect();
                format!("{i}. S: {body}")
            })
            .collect();
        let full: usize = lines.iter().map(|l| l.chars().count()).sum::<usize>() + lines.len().saturating_sub(1);
        let mut budgets: Vec<usize> = (0..6).map(|_| rng.gen_range(marker..=full + marker + 5)).collect();
        budgets.sort_unstable();
        let mut prev_kept = 0;
        for budget in budgets {
            let (text, truncated) = truncate_lines(&lines, Budget { max_chars: budget }).map_err(|e| e.to_string())?;
            ensure!(
                text.chars().count() <= budget,
                "case {case}: {} chars over budget {budget}",
                text.chars().count()
            );
            let kept: Vec<&str> = if truncated {
                let body = text.strip_suffix(TRUNCATION_MARKER).ok_or("marker missing")?;
                body.split_terminator('\n').collect()
            } else {
                ensure!(text == lines.join("\n"), "case {case}: untruncated text differs");
                lines.iter().map(String::as_str).collect()
            };
            ensure!(kept.len() <= lines.len(), "case {case}: extra lines");
            ensure!(
                kept.iter().zip(&lines).all(|(k, l)| *k == l),
                "case {case}: a line was cut or altered"
            );
            ensure!(
                kept.len() >= prev_kept,
                "case {case}: budget {budget} keeps fewer lines than a smaller one"
            );
            prev_kept = kept.len();
        }
        ensure!(
            truncate_lines(&lines, Budget { max_chars: marker - 1 }).is_err(),
            "case {case}: budget below the marker accepted"
        );
    }
    Ok("200 transcripts x 6 budgets: within budget, whole lines, monotone".into())
}

// ---------------------------------------------------------------- CLI

const CORPUS: [(&str, &str); 3] = [
    ("a", "speaker,text\nT,What do you notice Maya?\nMaya,They both have four sides and the same angles I think\nMaya,and right angles\nT,Why do you think that?\nLeo,Because each one is ninety degrees so they must match\n"),
    ("b", "speaker,text\nT,Who can tell me what a fraction is?\nLeo,  it is a part of a whole like one half\nT,Good Leo. What about the bottom number?\nMaya,the denominator tells how many equal parts there are in the whole\n"),
    ("c", "speaker,text\nT,Let us add these.\nMaya,two plus two is four\nLeo,I agree with Maya because two and two make four altogether\nT,Can you say more Leo?\n"),
];

const CLI_CONFIG: &str = "[roles]\nT = \"teacher\"\nMaya = \"student\"\nLeo = \"student\"\n\n[[groups]]\nname = \"students\"\nspeakers = [\"[STUDENT_1]\", \"[STUDENT_2]\"]\n\n[[groups]]\nname = \"teacher\"\nspeakers = [\"T\"]\n";

fn run_pipeline(dir: &Path) -> Result<(), String> {
    fs::create_dir_all(dir.join("in")).map_err(|e| e.to_string())?;
    for (id, text) in CORPUS {
        fs::write(dir.join(format!("in/{id}.csv")), text).map_err(|e| e.to_string())?;
    }
    fs::write(dir.join("config.toml"), CLI_CONFIG).map_err(|e| e.to_string())?;
    fs::write(
        dir.join("roster.json"),
        r#"[{"names": ["Maya"], "replacement": "[STUDENT_1]"}, {"names": ["Leo"], "replacement": "[STUDENT_2]"}]"#,
    )
    .map_err(|e| e.to_string())?;
    // Roles follow the pseudonyms after de-identification.
    fs::write(
        dir.join("roles.json"),
        r#"{"T": "teacher", "[STUDENT_1]": "student", "[STUDENT_2]": "student"}"#,
    )
    .map_err(|e| e.to_string())?;
    let mut labels = String::from("source_id,row_index,feature,label,score\n");
    for (id, _) in CORPUS {
        for row in 0..6 {
            labels.push_str(&format!("{id},{row},student_reasoning,{},0.75\n", row % 2));
            labels.push_str(&format!("{id},{row},focusing_question,{},0.6\n", (row + 1) % 2));
        }
    }
    fs::write(dir.join("labels.csv"), labels).map_err(|e| e.to_string())?;

    let steps: [&[&str]; 5] = [
        &[
            "preprocess",
            "in",
            "--deidentify",
            "--merge",
            "--normalize",
            "--roster",
            "roster.json",
            "--output-dir",
            "pre",
        ],
        &[
            "annotate",
            "pre",
            "--features",
            "talktime,student_reasoning,focusing_question",
            "--precomputed",
            "labels.csv",
            "--roles",
            "roles.json",
            "--output-dir",
            "ann",
        ],
        &[
            "analyze",
            "quantitative",
            "ann",
            "--feature",
            "student_reasoning",
            "--group-by",
            "speaker",
            "--repr",
            "percentage",
            "--mode",
            "report",
            "--out",
            "quant.txt",
        ],
        &[
            "analyze",
            "lexical",
            "ann",
            "--log-odds",
            "--top-k",
            "5",
            "--mode",
            "plot_data",
            "--out",
            "lex.json",
        ],
        &[
            "analyze",
            "temporal",
            "ann",
            "--feature",
            "talktime_words",
            "--bins",
            "4",
            "--mode",
            "plot_data",
            "--out",
            "temporal.json",
            "--svg",
            "temporal.svg",
        ],
    ];
    for args in steps {
        let out = Command::new(env!("CARGO_BIN_EXE_classtalk"))
            .current_dir(dir)
            .arg("--config")
            .arg("config.toml")
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(
            out.status.success(),
            "`{}` exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        );
    }
    Ok(())
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn check_manifest(dir: &Path, command: &str, steps: &[&str]) -> Result<(), String> {
    let text = fs::read_to_string(dir.join("manifest.json")).map_err(|e| e.to_string())?;
    let m: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    ensure!(m["command"] == command, "{command}: manifest command {}", m["command"]);
    ensure!(
        m["steps"] == serde_json::json!(steps),
        "{command}: manifest steps {}",
        m["steps"]
    );
    ensure!(m["succeeded"] == 3 && m["failed"] == 0, "{command}: manifest counts");
    for f in m["files"].as_array().ok_or("files missing")? {
        ensure!(f["status"] == "ok", "{command}: {} not ok", f["input"]);
        let output = f["output"].as_str().ok_or("output missing")?;
        ensure!(dir.join(output).is_file(), "{command}: {output} missing");
    }
    Ok(())
}

fn check_cli() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (one, two) = (tmp.path().join("one"), tmp.path().join("two"));
    run_pipeline(&one)?;
    run_pipeline(&two)?;
    let (a, b) = (tree(&one), tree(&two));
    ensure!(a.keys().eq(b.keys()), "file sets differ");
    for (name, bytes) in &a {
        ensure!(&b[name] == bytes, "{name} differs between runs");
    }
    check_manifest(&one.join("pre"), "preprocess", &["deidentify", "merge", "normalize"])?;
    check_manifest(
        &one.join("ann"),
        "annotate",
        &["talktime", "student_reasoning", "focusing_question"],
    )?;
    let lex: serde_json::Value = serde_json::from_slice(&a["lex.json"]).map_err(|e| e.to_string())?;
    ensure!(
        lex["series"][0]["x"].as_array().map(Vec::len) == Some(5),
        "log-odds did not list 5 n-grams"
    );
    Ok(format!(
        "{} files byte-identical across two runs; manifests valid",
        a.len()
    ))
}

// ---------------------------------------------------------------- driver

struct Criterion {
    name: &'static str,
    limit: Duration,
    run: fn() -> Check,
}

fn main() {
    let criteria = [
        Criterion {
            name: "deid: example and 1000-case fuzz",
            limit: Duration::from_secs(10),
            run: check_deid,
        },
        Criterion {
            name: "merge: idempotent, conserving, 500 transcripts",
            limit: Duration::from_secs(5),
            run: check_merge,
        },
        Criterion {
            name: "gating: exhaustive brute-force equivalence",
            limit: Duration::from_secs(30),
            run: check_gating,
        },
        Criterion {
            name: "log-odds: zero, swap, 50-digit oracle",
            limit: Duration::from_secs(20),
            run: check_log_odds,
        },
        Criterion {
            name: "percentages and temporal partition",
            limit: Duration::from_secs(10),
            run: check_quant_temporal,
        },
        Criterion {
            name: "classifier client vs mock server",
            limit: Duration::from_secs(10),
            run: check_classifier,
        },
        Criterion {
            name: "truncation: budget, whole lines, monotone",
            limit: Duration::from_secs(5),
            run: check_truncation,
        },
        Criterion {
            name: "CLI determinism and manifest",
            limit: Duration::from_secs(10),
            run: check_cli,
        },
    ];
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) if elapsed <= c.limit => (true, d),
            Ok(d) => (false, format!("{d}; took {elapsed:.2?}, limit {:?}", c.limit)),
            Err(e) => (false, e),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} [{}] {} ({:.2?} / {:?}): {}",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            c.name,
            elapsed,
            c.limit,
            detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
