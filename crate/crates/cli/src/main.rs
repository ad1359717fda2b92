mod commands;
mod config;
mod files;
mod manifest;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use classtalk_core::{Execution, Format};

use config::RunConfig;

/// A problem with flags, configuration or inputs; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Clean,
    /// Some files failed; details are in the manifest.
    Partial,
}

#[derive(Parser)]
#[command(
    name = "classtalk",
    version,
    about = "Pre-process, annotate and analyze classroom conversation transcripts"
)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Where preprocess and annotate write their outputs.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Worker threads for per-file processing (1 = sequential).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output file format; defaults to each input's format.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// De-identify, merge and normalize transcripts.
    Preprocess(commands::preprocess::PreprocessArgs),
    /// Add feature columns to transcripts.
    Annotate(commands::annotate::AnnotateArgs),
    /// Run an analysis and print, report or export plot data.
    Analyze(commands::analyze::AnalyzeArgs),
    /// Check the classifier service.
    Health(commands::health::HealthArgs),
}

/// Global settings shared by every command.
pub struct Context {
    pub config: RunConfig,
    pub output_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub jobs: usize,
}

impl Context {
    pub fn execution(&self) -> Execution {
        if self.jobs == 1 {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    pub fn output_dir(&self) -> Result<PathBuf, UsageError> {
        self.output_dir
            .clone()
            .ok_or_else(|| UsageError("no output directory: pass --output-dir or set output_dir in the config".into()))
    }
}

fn context(cli: &Cli) -> Result<Context, UsageError> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let format = match cli.format {
        Some(FormatArg::Csv) => Some(Format::Csv),
        Some(FormatArg::Json) => Some(Format::Json),
        None => config.format()?,
    };
    Ok(Context {
        output_dir: cli.output_dir.clone().or_else(|| config.output_dir.clone()),
        format,
        jobs: cli.jobs.or(config.jobs).unwrap_or(0),
        config,
    })
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let ctx = context(&cli)?;
    match cli.command {
        Command::Preprocess(args) => commands::preprocess::run(&ctx, args),
        Command::Annotate(args) => commands::annotate::run(&ctx, args),
        Command::Analyze(args) => commands::analyze::run(&ctx, args),
        Command::Health(args) => commands::health::run(&ctx, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
