use clap::Args;
use classtalk_core::inference::health_check;

use crate::{Context, Outcome, UsageError};

#[derive(Args)]
pub struct HealthArgs {
    /// Classifier service URL; defaults to `classifier.endpoint`.
    #[arg(long)]
    endpoint: Option<String>,
}

pub fn run(ctx: &Context, args: HealthArgs) -> anyhow::Result<Outcome> {
    let section = ctx.config.classifier.clone().unwrap_or_default();
    let endpoint = args
        .endpoint
        .or_else(|| section.endpoint.clone())
        .ok_or_else(|| UsageError("no classifier endpoint: pass --endpoint or set classifier.endpoint".into()))?;
    let health = health_check(&endpoint, section.limits())?;
    println!("{}", serde_json::to_string_pretty(&health)?);
    Ok(if health.ok { Outcome::Clean } else { Outcome::Partial })
}
