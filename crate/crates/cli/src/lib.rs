//! Experiment orchestration for `semaffinity`: run files, the model ×
//! dataset matrix, and CSV/JSON/chart export.

pub mod config;
pub mod experiment;
pub mod matrix;
pub mod report;

use std::io::Write;
use std::path::Path;

use semaffinity::{Error, Result};

pub use config::{Overrides, RunConfig};
pub use experiment::{run_experiment, ExperimentSpec, Stage, StageFailure};
pub use matrix::run_matrix;
pub use report::{export_results, RunReport};

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |e: std::io::Error| Error::Render(format!("{}: {e}", path.display()));
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// `name` with every character outside `[A-Za-z0-9._-]` replaced by `_`.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "._-".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Forward-slash form of a relative path, for reports.
pub(crate) fn relative_name(path: &Path) -> String {
    path.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}
