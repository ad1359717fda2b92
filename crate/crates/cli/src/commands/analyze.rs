use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context as _;
use clap::{Args, Subcommand, ValueEnum};
use classtalk_core::analyze::{
    feature_kind, log_odds_report, log_odds_with, ngram_counts_with, ngram_frequency_report, qualitative_examples,
    quantitative_summary_with, render, temporal_profile_corpus_with, AnalysisError, AnalysisReport, BinSpec,
    ContextWindow, GroupBy, NgramCounts, Prior, RenderMode, Rendered, Representation, SpeakerGroup,
};
use classtalk_core::llm::{run_prompt, Budget, ChatParams, FormatOptions, HttpChatClient, PromptTemplate};
use classtalk_core::{Transcript, Value};

use crate::files::{expand_inputs, write_atomic};
use crate::{Context, Outcome, UsageError};

#[derive(Args)]
pub struct AnalyzeArgs {
    #[command(subcommand)]
    kind: AnalysisKind,
}

#[derive(Args)]
struct Common {
    /// Transcript files or directories.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// print, report or plot_data.
    #[arg(long, default_value = "print")]
    mode: RenderMode,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG chart (plot_data mode only).
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupArg {
    None,
    Speaker,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReprArg {
    Raw,
    Percentage,
    Mean,
}

impl From<GroupArg> for GroupBy {
    fn from(g: GroupArg) -> Self {
        match g {
            GroupArg::None => GroupBy::None,
            GroupArg::Speaker => GroupBy::Speaker,
        }
    }
}

impl From<ReprArg> for Representation {
    fn from(r: ReprArg) -> Self {
        match r {
            ReprArg::Raw => Representation::Raw,
            ReprArg::Percentage => Representation::Percentage,
            ReprArg::Mean => Representation::Mean,
        }
    }
}

#[derive(Subcommand)]
enum AnalysisKind {
    /// Example utterances with a given feature value, in context.
    Qualitative {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        feature: String,
        /// Value to look for, e.g. `1`.
        #[arg(long)]
        value: String,
        #[arg(long, default_value_t = 10)]
        max: usize,
        /// Lines of context before each example.
        #[arg(long, default_value_t = 1)]
        before: usize,
        /// Lines of context after each example.
        #[arg(long, default_value_t = 1)]
        after: usize,
    },
    /// Totals, percentages or means of a feature.
    Quantitative {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        feature: String,
        #[arg(long, value_enum, default_value = "none")]
        group_by: GroupArg,
        #[arg(long = "repr", value_enum, default_value = "raw")]
        representation: ReprArg,
    },
    /// N-gram frequencies per speaker group, or weighted log-odds between two groups.
    Lexical {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        top_k: usize,
        /// Compare two groups instead of listing frequencies.
        #[arg(long)]
        log_odds: bool,
        /// Speaker group as NAME=SPEAKER1,SPEAKER2 (repeatable); replaces configured groups.
        #[arg(long = "group")]
        groups: Vec<String>,
        /// Group A for log-odds; defaults to the first group.
        #[arg(long)]
        group_a: Option<String>,
        /// Group B for log-odds; defaults to the second group.
        #[arg(long)]
        group_b: Option<String>,
        /// Background n-gram counts as CSV with `ngram,count` columns.
        #[arg(long)]
        background: Option<PathBuf>,
        /// Total prior pseudo-count; defaults to the size of both groups.
        #[arg(long)]
        prior_mass: Option<f64>,
    },
    /// A feature across equal slices of each transcript.
    Temporal {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        feature: String,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        #[arg(long, value_enum, default_value = "none")]
        group_by: GroupArg,
        #[arg(long = "repr", value_enum, default_value = "raw")]
        representation: ReprArg,
    },
    /// Send each transcript to a chat model with a prompt template.
    Llm {
        /// Transcript files or directories.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Built-in template: summarize or suggestions.
        #[arg(long, default_value = "summarize", conflicts_with = "prompt_file")]
        template: String,
        /// User prompt with a single `{transcript}` placeholder.
        #[arg(long)]
        prompt_file: Option<PathBuf>,
        /// System prompt to use with --prompt-file.
        #[arg(long, requires = "prompt_file")]
        system_file: Option<PathBuf>,
        /// Prefix each line with its row number.
        #[arg(long)]
        line_numbers: bool,
        /// Overrides `llm.model`.
        #[arg(long)]
        model: Option<String>,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const DEFAULT_SYSTEM: &str = "You help teachers reflect on classroom discussions.";

fn usage_on_input_errors(e: AnalysisError) -> anyhow::Error {
    match e {
        AnalysisError::MissingFeature { .. } | AnalysisError::Config(_) => UsageError(e.to_string()).into(),
        other => other.into(),
    }
}

fn load_corpus(ctx: &Context, inputs: &[PathBuf]) -> anyhow::Result<Vec<Transcript>> {
    let mapping = ctx.config.mapping()?;
    expand_inputs(inputs)?
        .iter()
        .map(|f| f.load(&mapping).with_context(|| format!("loading {}", f.display())))
        .collect()
}

fn emit(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn finish_report(report: &AnalysisReport, common: &Common) -> anyhow::Result<Outcome> {
    if common.svg.is_some() && common.mode != RenderMode::PlotData {
        return Err(UsageError("--svg needs --mode plot_data".into()).into());
    }
    let rendered = render(report, common.mode);
    if let (Some(svg), Rendered::Plot(doc)) = (&common.svg, &rendered) {
        write_atomic(svg, doc.to_svg().as_bytes()).with_context(|| format!("writing {}", svg.display()))?;
    }
    emit(&rendered.to_text(), common.out.as_deref())?;
    Ok(Outcome::Clean)
}

fn parse_group(spec: &str) -> Result<SpeakerGroup, UsageError> {
    let (name, speakers) = spec
        .split_once('=')
        .ok_or_else(|| UsageError(format!("--group `{spec}` should look like NAME=SPEAKER1,SPEAKER2")))?;
    let speakers: Vec<&str> = speakers.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if name.trim().is_empty() || speakers.is_empty() {
        return Err(UsageError(format!(
            "--group `{spec}` needs a name and at least one speaker"
        )));
    }
    Ok(SpeakerGroup::new(name.trim(), speakers))
}

fn load_background(path: &Path) -> anyhow::Result<NgramCounts> {
    #[derive(serde::Deserialize)]
    struct Row {
        ngram: String,
        count: u64,
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    let mut counts = NgramCounts::new();
    for row in reader.deserialize::<Row>() {
        let row = row.map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
        *counts.entry(row.ngram).or_default() += row.count;
    }
    Ok(counts)
}

fn pick<'a>(groups: &'a [SpeakerGroup], name: Option<&str>, fallback: usize) -> Result<&'a SpeakerGroup, UsageError> {
    match name {
        Some(n) => groups
            .iter()
            .find(|g| g.name == n)
            .ok_or_else(|| UsageError(format!("no speaker group named `{n}`"))),
        None => groups
            .get(fallback)
            .ok_or_else(|| UsageError("log-odds needs two speaker groups".into())),
    }
}

pub fn run(ctx: &Context, args: AnalyzeArgs) -> anyhow::Result<Outcome> {
    let exec = ctx.execution();
    match args.kind {
        AnalysisKind::Qualitative {
            common,
            feature,
            value,
            max,
            before,
            after,
        } => {
            let corpus = load_corpus(ctx, &common.inputs)?;
            let target = Value::parse_cell(&value);
            let report = qualitative_examples(&corpus, &feature, &target, max, ContextWindow { before, after })
                .map_err(usage_on_input_errors)?;
            finish_report(&report, &common)
        }
        AnalysisKind::Quantitative {
            common,
            feature,
            group_by,
            representation,
        } => {
            let corpus = load_corpus(ctx, &common.inputs)?;
            let kind = feature_kind(&corpus, &feature);
            let report =
                quantitative_summary_with(exec, &corpus, &feature, &kind, group_by.into(), representation.into())
                    .map_err(usage_on_input_errors)?;
            finish_report(&report, &common)
        }
        AnalysisKind::Temporal {
            common,
            feature,
            bins,
            group_by,
            representation,
        } => {
            let bins = BinSpec::new(bins).map_err(|e| UsageError(e.to_string()))?;
            let corpus = load_corpus(ctx, &common.inputs)?;
            let report =
                temporal_profile_corpus_with(exec, &corpus, &feature, bins, group_by.into(), representation.into())
                    .map_err(usage_on_input_errors)?;
            finish_report(&report, &common)
        }
        AnalysisKind::Lexical {
            common,
            n,
            top_k,
            log_odds,
            groups,
            group_a,
            group_b,
            background,
            prior_mass,
        } => {
            let groups = if groups.is_empty() {
                ctx.config.speaker_groups()?
            } else {
                groups.iter().map(|g| parse_group(g)).collect::<Result<Vec<_>, _>>()?
            };
            let corpus = load_corpus(ctx, &common.inputs)?;
            let report = if log_odds {
                let a = pick(&groups, group_a.as_deref(), 0)?;
                let b = pick(&groups, group_b.as_deref(), 1)?;
                if a.name == b.name {
                    return Err(UsageError("log-odds needs two different groups".into()).into());
                }
                let pair = [a.clone(), b.clone()];
                let tables = ngram_counts_with(exec, &corpus, n, &pair).map_err(usage_on_input_errors)?;
                let prior = Prior {
                    background: background.as_deref().map(load_background).transpose()?,
                    prior_mass,
                };
                let result = log_odds_with(exec, &tables[0].counts, &tables[1].counts, &prior, top_k)
                    .map_err(usage_on_input_errors)?;
                log_odds_report(&a.name, &b.name, n, result)
            } else {
                if background.is_some() || prior_mass.is_some() {
                    return Err(UsageError("--background and --prior-mass only apply with --log-odds".into()).into());
                }
                let tables = ngram_counts_with(exec, &corpus, n, &groups).map_err(usage_on_input_errors)?;
                ngram_frequency_report(tables, n, top_k)
            };
            finish_report(&report, &common)
        }
        AnalysisKind::Llm {
            inputs,
            template,
            prompt_file,
            system_file,
            line_numbers,
            model,
            out,
        } => {
            let template = match &prompt_file {
                Some(p) => {
                    let user = std::fs::read_to_string(p).map_err(|e| UsageError(format!("{}: {e}", p.display())))?;
                    let system = match &system_file {
                        Some(s) => {
                            std::fs::read_to_string(s).map_err(|e| UsageError(format!("{}: {e}", s.display())))?
                        }
                        None => DEFAULT_SYSTEM.to_string(),
                    };
                    PromptTemplate::custom(system, user).map_err(|e| UsageError(e.to_string()))?
                }
                None => PromptTemplate::builtin(&template).ok_or_else(|| {
                    UsageError(format!(
                        "unknown template `{template}`; choose summarize or suggestions"
                    ))
                })?,
            };
            let section = ctx.config.llm.clone().unwrap_or_default();
            let options = if line_numbers {
                FormatOptions::numbered()
            } else {
                FormatOptions::default()
            };
            let params = ChatParams {
                model_id: model.unwrap_or_else(|| section.model.clone()),
                temperature: section.temperature,
                max_output_tokens: section.max_output_tokens,
                budget: Budget::from_tokens(
                    section.context_tokens,
                    section.max_output_tokens as usize,
                    section.chars_per_token,
                ),
            };
            let corpus = load_corpus(ctx, &inputs)?;
            let client = HttpChatClient::from_env(
                section.base_url.clone(),
                &section.api_key_env,
                Duration::from_secs_f64(section.timeout_secs),
            )
            .map_err(|e| UsageError(e.to_string()))?;
            let mut text = String::new();
            for t in &corpus {
                let output = run_prompt(&template, t, &options, &client, &params)
                    .with_context(|| format!("prompting for {}", t.source_id()))?;
                if corpus.len() > 1 {
                    text.push_str(&format!("## {}\n\n", t.source_id()));
                }
                if output.truncated_input {
                    log::warn!("{}: transcript trimmed to fit the context budget", t.source_id());
                }
                text.push_str(output.text.trim_end());
                text.push_str("\n\n");
            }
            emit(text.trim_end(), out.as_deref())?;
            Ok(Outcome::Clean)
        }
    }
}
