//! Directory of synthesized views with a JSON manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dibr::SynthView;
use crate::error::{Error, Result};
use crate::geom::Baseline;
use crate::image::ErpImage;

use super::{read_json, read_mask_png, read_png, write_depth_pfm, write_json, write_mask_png, write_png};

pub const MANIFEST: &str = "views.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewEntry {
    pub baseline: Baseline,
    pub image: PathBuf,
    pub mask: PathBuf,
    pub depth: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewManifest {
    pub views: Vec<ViewEntry>,
}

/// A view read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedView {
    pub baseline: Baseline,
    pub image: ErpImage,
    pub mask: Vec<bool>,
}

/// Writes `view_<k>.png`, `view_<k>_mask.png`, `view_<k>_depth.pfm` and the
/// manifest into `dir`.
pub fn save_views(dir: impl AsRef<Path>, views: &[SynthView]) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let mut entries = Vec::with_capacity(views.len());
    for (k, v) in views.iter().enumerate() {
        let e = ViewEntry {
            baseline: v.baseline,
            image: format!("view_{k}.png").into(),
            mask: format!("view_{k}_mask.png").into(),
            depth: format!("view_{k}_depth.pfm").into(),
        };
        write_png(dir.join(&e.image), &v.image)?;
        write_mask_png(dir.join(&e.mask), v.image.grid(), &v.mask)?;
        write_depth_pfm(dir.join(&e.depth), &v.depth)?;
        entries.push(e);
    }
    let path = dir.join(MANIFEST);
    write_json(&path, &ViewManifest { views: entries })?;
    Ok(path)
}

/// Loads the images and masks listed in a manifest. Paths are relative to
/// the manifest's directory.
pub fn load_views(manifest: impl AsRef<Path>) -> Result<Vec<LoadedView>> {
    let manifest = manifest.as_ref();
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let m: ViewManifest = read_json(manifest)?;
    if m.views.is_empty() {
        return Err(Error::config(format!("{} lists no views", manifest.display())));
    }
    m.views
        .iter()
        .map(|e| {
            let image = read_png(dir.join(&e.image))?;
            let (grid, mask) = read_mask_png(dir.join(&e.mask))?;
            if grid != image.grid() {
                return Err(Error::format(format!("{}: mask and image sizes differ", e.mask.display())));
            }
            Ok(LoadedView { baseline: e.baseline, image, mask })
        })
        .collect()
}
