use std::path::PathBuf;

use clap::Args;
use classtalk_core::preprocess::{deidentify, merge_consecutive, normalize_text, DeidOptions, Roster};
use serde_json::json;

use super::{finish, per_file};
use crate::files::{encode, expand_inputs, prepare_output_dir, write_atomic};
use crate::manifest::{FileRecord, Manifest};
use crate::{Context, Outcome, UsageError};

#[derive(Args)]
pub struct PreprocessArgs {
    /// Transcript files or directories.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Replace roster names with their placeholders.
    #[arg(long)]
    deidentify: bool,
    /// Join consecutive utterances by the same speaker.
    #[arg(long)]
    merge: bool,
    /// Tidy whitespace and capitalization.
    #[arg(long)]
    normalize: bool,
    /// Roster JSON; overrides `paths.roster`.
    #[arg(long)]
    roster: Option<PathBuf>,
    /// Match roster names case-sensitively.
    #[arg(long)]
    case_sensitive: bool,
    /// Leave the speaker column untouched when de-identifying.
    #[arg(long)]
    keep_speaker_names: bool,
}

const REPORT_DIR: &str = "reports";

pub fn run(ctx: &Context, args: PreprocessArgs) -> anyhow::Result<Outcome> {
    let cfg = &ctx.config;
    let mapping = cfg.mapping()?;
    let out = ctx.output_dir()?;
    let files = expand_inputs(&args.inputs)?;

    let deid_options = DeidOptions {
        case_sensitive: args.case_sensitive || cfg.preprocess.case_sensitive,
        deidentify_speaker_column: cfg.preprocess.deidentify_speaker_column && !args.keep_speaker_names,
    };
    let roster_path = args.roster.clone().or_else(|| cfg.paths.roster.clone());
    let roster = if args.deidentify {
        let path = roster_path
            .as_ref()
            .ok_or_else(|| UsageError("--deidentify needs a roster: pass --roster or set paths.roster".into()))?;
        Some(Roster::load(path).map_err(|e| UsageError(e.to_string()))?)
    } else {
        None
    };
    let separator = cfg.preprocess.merge_separator.clone();
    let normalize_options = cfg.preprocess.normalize_options();

    prepare_output_dir(&out, &files)?;
    if roster.is_some() {
        std::fs::create_dir_all(out.join(REPORT_DIR))?;
    }

    let mut steps = Vec::new();
    let mut options = serde_json::Map::new();
    if args.deidentify {
        steps.push("deidentify".to_string());
        options.insert(
            "deidentify".into(),
            json!({
                "roster": roster_path.as_ref().map(|p| p.display().to_string()),
                "case_sensitive": deid_options.case_sensitive,
                "deidentify_speaker_column": deid_options.deidentify_speaker_column,
            }),
        );
    }
    if args.merge {
        steps.push("merge".to_string());
        options.insert("merge".into(), json!({ "separator": separator }));
    }
    if args.normalize {
        steps.push("normalize".to_string());
        options.insert(
            "normalize".into(),
            json!({
                "strip_whitespace": normalize_options.strip_whitespace,
                "collapse_internal_spaces": normalize_options.collapse_internal_spaces,
                "capitalize_sentence_start": normalize_options.capitalize_sentence_start,
            }),
        );
    }
    options.insert("format".into(), json!(ctx.format.map(|f| f.extension())));

    let records = per_file(ctx, &files, |file| {
        let mut rec = FileRecord::new(file.display(), file.source_id());
        let result = (|| -> anyhow::Result<FileRecord> {
            let mut t = file.load(&mapping)?;
            let mut rec = rec.clone();
            rec.rows_in = Some(t.len());
            if let Some(roster) = &roster {
                let (clean, report) = deidentify(&t, roster, deid_options);
                let name = format!("{}.deid.csv", file.source_id());
                let mut buf = Vec::new();
                report.write_csv(&mut buf)?;
                write_atomic(&out.join(REPORT_DIR).join(&name), &buf)?;
                rec.replacements = Some(report.total_count());
                rec.report = Some(format!("{REPORT_DIR}/{name}"));
                t = clean;
            }
            if args.merge {
                t = merge_consecutive(&t, &separator);
            }
            if args.normalize {
                t = normalize_text(&t, normalize_options);
            }
            let format = ctx.format.unwrap_or(file.format);
            let name = format!("{}.{}", file.source_id(), format.extension());
            write_atomic(&out.join(&name), &encode(&t, format)?)?;
            rec.rows_out = Some(t.len());
            rec.output = Some(name);
            Ok(rec)
        })();
        match result {
            Ok(r) => r,
            Err(e) => {
                rec.rows_in = None;
                rec.failed(format!("{e:#}"))
            }
        }
    });

    let manifest = Manifest::new("preprocess", steps, serde_json::Value::Object(options), records);
    finish(&manifest, &out)
}
