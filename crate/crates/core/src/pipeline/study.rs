//! Synthesized-view quality as a function of baseline and field of view.
//!
//! For every vertical baseline the scene is rendered from the translated
//! camera as ground truth. The original RGB-D panorama is forward-splatted
//! to the same position, either as a whole panorama or as a grid of pinhole
//! crops, and compared with the matching ground-truth view. Disocclusion and
//! boundary holes count as black.

use serde::{Deserialize, Serialize};

use crate::dibr::{forward_splat, forward_splat_persp, SplatParams};
use crate::error::{Error, Result};
use crate::geom::{Baseline, ErpGrid, Vec3};
use crate::image::{ErpImage, Rgb};
use crate::persp::{perspective_crop, perspective_crop_depth, PerspCamera};
use crate::scene::{raycast_erp, SceneSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// Vertical baselines in metres.
    pub baselines: Vec<f64>,
    /// Pinhole fields of view in degrees. The full panorama is always added.
    pub fovs: Vec<f64>,
    /// Crop centres, degrees.
    pub pitches: Vec<f64>,
    pub yaws: Vec<f64>,
    pub splat: SplatParams,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            baselines: vec![0.0, 0.01, 0.02, 0.04, 0.08, 0.16, 0.32, 0.64],
            fovs: vec![64.0, 80.0, 96.0, 112.0, 128.0],
            pitches: vec![-67.5, -22.5, 22.5, 67.5],
            yaws: vec![-150.0, -90.0, -30.0, 30.0, 90.0, 150.0],
            splat: SplatParams::default(),
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.baselines.is_empty() || self.baselines.iter().any(|b| !b.is_finite()) {
            return Err(Error::config("the study needs finite baselines"));
        }
        if self.fovs.iter().any(|f| !(*f > 0.0 && *f < 180.0)) {
            return Err(Error::config("pinhole fields of view must lie in (0, 180) degrees"));
        }
        if !self.fovs.is_empty() && (self.pitches.is_empty() || self.yaws.is_empty()) {
            return Err(Error::config("pinhole crops need at least one pitch and one yaw"));
        }
        if self.pitches.iter().chain(&self.yaws).any(|a| !a.is_finite()) {
            return Err(Error::config("crop angles must be finite"));
        }
        self.splat.validate()
    }
}

/// Error curve of one field of view over the configured baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FovCurve {
    /// Degrees; 360 for the full panorama.
    pub fov: f64,
    pub mse: Vec<f64>,
}

impl FovCurve {
    pub fn is_panorama(&self) -> bool {
        self.fov >= 360.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneStudy {
    pub scene: String,
    pub baselines: Vec<f64>,
    pub curves: Vec<FovCurve>,
}

impl SceneStudy {
    pub fn curve(&self, fov: f64) -> Option<&FovCurve> {
        self.curves.iter().find(|c| c.fov == fov)
    }

    /// Rows of `scene,fov,baseline,mse`.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for c in &self.curves {
            for (b, m) in self.baselines.iter().zip(&c.mse) {
                out.push_str(&format!("{},{},{},{}\n", self.scene, c.fov, b, m));
            }
        }
        out
    }
}

pub const STUDY_CSV_HEADER: &str = "scene,fov,baseline,mse\n";

/// Mean squared colour error over all pixels and channels. Pixels outside
/// `filled` are compared as black.
pub fn mse(pred: &[Rgb], gt: &[Rgb], filled: Option<&[bool]>) -> Result<f64> {
    if pred.len() != gt.len() || filled.is_some_and(|f| f.len() != pred.len()) {
        return Err(Error::config("images differ in size"));
    }
    if pred.is_empty() {
        return Err(Error::numerical("cannot average over an empty image"));
    }
    let mut sum = 0.0f64;
    for (i, (p, g)) in pred.iter().zip(gt).enumerate() {
        let p = if filled.map_or(true, |f| f[i]) { *p } else { [0.0; 3] };
        for k in 0..3 {
            let e = (p[k] - g[k]) as f64;
            sum += e * e;
        }
    }
    Ok(sum / (3 * pred.len()) as f64)
}

/// Side of a square crop whose focal length matches the panorama's
/// angular resolution at the equator.
fn crop_side(fov: f64, grid: ErpGrid) -> usize {
    let f = grid.rows_per_radian();
    ((2.0 * f * (fov.to_radians() / 2.0).tan()).round() as usize).max(2)
}

/// Runs the study on one scene from camera `cam`.
pub fn baseline_fov_study(
    scene: &SceneSpec,
    name: &str,
    cam: Vec3,
    grid: ErpGrid,
    config: &StudyConfig,
) -> Result<SceneStudy> {
    config.validate()?;
    let (image, depth) = raycast_erp(scene, cam, grid)?;
    let cameras: Vec<Vec<PerspCamera>> = config
        .fovs
        .iter()
        .map(|&fov| {
            let side = crop_side(fov, grid);
            config
                .pitches
                .iter()
                .flat_map(|&p| config.yaws.iter().map(move |&y| (p, y)))
                .map(|(p, y)| PerspCamera::new(side, side, fov, y.to_radians(), p.to_radians()))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let sources: Vec<Vec<_>> = cameras
        .iter()
        .map(|cams| cams.iter().map(|&c| (perspective_crop(&image, c), perspective_crop_depth(&depth, c))).collect())
        .collect();

    let mut curves: Vec<FovCurve> = config.fovs.iter().map(|&fov| FovCurve { fov, mse: vec![] }).collect();
    let mut panorama = FovCurve { fov: 360.0, mse: vec![] };
    for &b in &config.baselines {
        let baseline = Baseline::vertical(b);
        let (target, _) = raycast_erp(scene, cam + baseline.translation(), grid)?;
        for (curve, crops) in curves.iter_mut().zip(&sources) {
            let mut total = 0.0;
            for (src, src_depth) in crops {
                let (synth, filled) = forward_splat_persp(src, src_depth, baseline, config.splat)?;
                let gt = perspective_crop(&target, src.camera);
                total += mse(&synth.pixels, &gt.pixels, Some(&filled))?;
            }
            curve.mse.push(total / crops.len() as f64);
        }
        panorama.mse.push(erp_mse(&image, &depth, baseline, &target, config.splat)?);
        log::debug!("{name}: baseline {b} done");
    }
    curves.push(panorama);
    Ok(SceneStudy { scene: name.to_string(), baselines: config.baselines.clone(), curves })
}

fn erp_mse(
    image: &ErpImage,
    depth: &crate::image::DepthMap,
    baseline: Baseline,
    target: &ErpImage,
    splat: SplatParams,
) -> Result<f64> {
    let view = forward_splat(image, depth, baseline, splat)?;
    mse(view.image.pixels(), target.pixels(), Some(&view.mask))
}
