use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use anyhow::Context as _;
use clap::Args;
use classtalk_core::annotate::{Annotator, Backend, ClassifierAccess, Lexicon};
use classtalk_core::inference::{HttpClassifier, PrecomputedLabels};
use serde_json::json;

use super::{finish, per_file};
use crate::config::ClassifierSection;
use crate::files::{encode, expand_inputs, prepare_output_dir, write_atomic};
use crate::manifest::{FileRecord, Manifest};
use crate::{Context, Outcome, UsageError};

#[derive(Args)]
pub struct AnnotateArgs {
    /// Transcript files or directories.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Features to add, in order (comma-separated).
    #[arg(long, value_delimiter = ',', required = true)]
    features: Vec<String>,
    /// Classifier service URL; replaces the configured backend.
    #[arg(long, conflicts_with = "precomputed")]
    endpoint: Option<String>,
    /// Precomputed label CSV; replaces the configured backend.
    #[arg(long)]
    precomputed: Option<PathBuf>,
    /// Lexicon file for math_density; overrides `paths.lexicon`.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Role map JSON; overrides `paths.roles`.
    #[arg(long)]
    roles: Option<PathBuf>,
}

enum Source {
    Endpoint(String),
    Precomputed(PathBuf),
}

fn classifier_source(args: &AnnotateArgs, section: Option<&ClassifierSection>) -> Result<Source, UsageError> {
    if let Some(e) = &args.endpoint {
        return Ok(Source::Endpoint(e.clone()));
    }
    if let Some(p) = &args.precomputed {
        return Ok(Source::Precomputed(p.clone()));
    }
    match section.map(|s| (&s.endpoint, &s.precomputed)) {
        Some((Some(e), None)) => Ok(Source::Endpoint(e.clone())),
        Some((None, Some(p))) => Ok(Source::Precomputed(p.clone())),
        Some((Some(_), Some(_))) => Err(UsageError(
            "[classifier] sets both endpoint and precomputed; keep exactly one".into(),
        )),
        _ => Err(UsageError(
            "classifier features need a backend: pass --endpoint or --precomputed, or configure [classifier]".into(),
        )),
    }
}

pub fn run(ctx: &Context, args: AnnotateArgs) -> anyhow::Result<Outcome> {
    let mapping = ctx.config.mapping()?;
    let out = ctx.output_dir()?;
    let files = expand_inputs(&args.inputs)?;

    let mut annotator = Annotator::default();
    let specs = args
        .features
        .iter()
        .map(|f| annotator.spec(f))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| UsageError(e.to_string()))?;

    let mut cfg = ctx.config.clone();
    if let Some(p) = &args.roles {
        cfg.paths.roles = Some(p.clone());
    }
    annotator.roles = cfg.role_map()?;
    let lexicon_path = args.lexicon.clone().or_else(|| cfg.paths.lexicon.clone());
    if let Some(p) = &lexicon_path {
        annotator.lexicon = Some(Lexicon::load(p).map_err(|e| UsageError(e.to_string()))?);
    }
    annotator.speaker_overrides = cfg
        .speakers
        .iter()
        .map(|(f, s)| (f.clone(), s.iter().cloned().collect::<BTreeSet<_>>()))
        .collect::<BTreeMap<_, _>>();

    let mut options = serde_json::Map::new();
    if specs.iter().any(|s| s.backend == Backend::Classifier) {
        let section = cfg.classifier.clone().unwrap_or_default();
        let access = match classifier_source(&args, Some(&section))? {
            Source::Endpoint(url) => {
                options.insert("classifier".into(), json!({ "endpoint": url }));
                let client = HttpClassifier::new(url.clone(), section.limits());
                ClassifierAccess::new(client).with_context(|| format!("classifier service at {url}"))?
            }
            Source::Precomputed(path) => {
                options.insert(
                    "classifier".into(),
                    json!({ "precomputed": path.display().to_string() }),
                );
                let labels = PrecomputedLabels::load(&path).map_err(|e| UsageError(e.to_string()))?;
                ClassifierAccess::new(labels)?
            }
        };
        annotator.classifier = Some(access);
    }
    if let Some(p) = &lexicon_path {
        options.insert("lexicon".into(), json!(p.display().to_string()));
    }
    options.insert("format".into(), json!(ctx.format.map(|f| f.extension())));
    annotator.check(&args.features).map_err(|e| UsageError(e.to_string()))?;

    prepare_output_dir(&out, &files)?;
    let features = args.features.clone();
    let records = per_file(ctx, &files, |file| {
        let rec = FileRecord::new(file.display(), file.source_id());
        let result = (|| -> anyhow::Result<FileRecord> {
            let t = file.load(&mapping)?;
            let annotated = annotator.annotate_all(&t, &features)?;
            let format = ctx.format.unwrap_or(file.format);
            let name = format!("{}.{}", file.source_id(), format.extension());
            write_atomic(&out.join(&name), &encode(&annotated, format)?)?;
            let mut rec = rec.clone();
            rec.rows_in = Some(t.len());
            rec.rows_out = Some(annotated.len());
            rec.output = Some(name);
            Ok(rec)
        })();
        result.unwrap_or_else(|e| rec.failed(format!("{e:#}")))
    });

    let manifest = Manifest::new("annotate", features, serde_json::Value::Object(options), records);
    finish(&manifest, &out)
}
