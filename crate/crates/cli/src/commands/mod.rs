pub mod analyze;
pub mod annotate;
pub mod health;
pub mod preprocess;

use classtalk_core::exec;

use crate::files::InputFile;
use crate::manifest::{FileRecord, Manifest, Status};
use crate::{Context, Outcome};

/// Runs `work` on every file (in parallel unless `--jobs 1`), keeping input
/// order in the returned records.
pub fn per_file<F>(ctx: &Context, files: &[InputFile], work: F) -> Vec<FileRecord>
where
    F: Fn(&InputFile) -> FileRecord + Sync + Send,
{
    let exec = ctx.execution();
    exec::with_threads(ctx.jobs, || exec::map(exec, files, &work))
}

pub fn finish(manifest: &Manifest, dir: &std::path::Path) -> anyhow::Result<Outcome> {
    manifest.write(dir)?;
    for f in manifest.files.iter().filter(|f| f.status == Status::Failed) {
        log::error!("{}: {}", f.input, f.error.as_deref().unwrap_or("failed"));
    }
    Ok(if manifest.failed > 0 {
        eprintln!(
            "{} of {} files failed; see {}",
            manifest.failed,
            manifest.files.len(),
            dir.join(crate::manifest::MANIFEST_NAME).display()
        );
        Outcome::Partial
    } else {
        Outcome::Clean
    })
}
