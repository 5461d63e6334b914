pub mod bench;
pub mod embed;
pub mod eval;
pub mod extract;
pub mod heatmap;
pub mod invariance;
pub mod synth;

use std::fs;
use std::path::Path;

use crate::error::{CliError, CliResult};

pub(crate) fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))
}

/// File stem used to name outputs derived from `path`.
pub(crate) fn stem(path: Option<&Path>) -> String {
    path.and_then(|p| p.file_stem())
        .map_or_else(|| "synthetic".to_string(), |s| s.to_string_lossy().into_owned())
}
