//! File formats: PFM depth, PNG images and masks, JSON configs, reports
//! and view directories.

pub mod pfm;
pub mod png;
pub mod views;

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pipeline::{PipelineConfig, SuiteConfig};

pub use pfm::{decode_pfm, encode_pfm, read_depth_pfm, write_depth_pfm};
pub use png::{read_mask_png, read_png, write_mask_png, write_png, write_rgb_png};
pub use views::{load_views, save_views, LoadedView, ViewManifest};

/// Prefixes I/O and codec errors with the offending path.
pub(crate) fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        Error::Image(img) => Error::format(format!("{}: {img}", path.display())),
        other => other,
    }
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| with_path(path, e.into()))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| with_path(path, e.into()))
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    write_file(path.as_ref(), text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    serde_json::from_slice(&read_file(path)?).map_err(|e| Error::config(format!("{}: {e}", path.display())))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn parent(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

/// Loads a pipeline config from either a bare config or a report (whose
/// embedded `config` is used). Relative scene paths resolve against the
/// file's directory.
pub fn load_pipeline_config(path: impl AsRef<Path>) -> Result<PipelineConfig> {
    let path = path.as_ref();
    let value: serde_json::Value = read_json(path)?;
    let inner = match value.get("config") {
        Some(c) if value.get("final").is_some() => c.clone(),
        _ => value,
    };
    let mut config: PipelineConfig =
        serde_json::from_value(inner).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
    config.scene.rebase(parent(path));
    Ok(config)
}

pub fn load_suite_config(path: impl AsRef<Path>) -> Result<SuiteConfig> {
    let path = path.as_ref();
    let mut suite: SuiteConfig = read_json(path)?;
    suite.rebase(parent(path));
    Ok(suite)
}
