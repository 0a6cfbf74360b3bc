//! Depth-image-based rendering by forward splatting.
//!
//! Every valid source pixel is reprojected into the translated camera and
//! spread over the 2×2 neighbouring target pixels with bilinear weights.
//! Collisions are resolved by a soft z-buffer: each contribution is further
//! weighted by `exp(-z / sigma_z)` and the target takes the weighted average.
//! Targets whose summed bilinear weight stays below `eps_w` are holes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{exact_reproject, Baseline, PixelCoord};
use crate::image::{DepthMap, ErpImage, Rgb};
use crate::persp::{PerspDepth, PerspImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplatParams {
    /// Soft z-buffer scale, meters.
    pub sigma_z: f64,
    /// Minimum splat coverage for a target pixel to count as filled.
    pub eps_w: f64,
}

impl Default for SplatParams {
    fn default() -> Self {
        Self { sigma_z: 0.05, eps_w: 1e-4 }
    }
}

impl SplatParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_z > 0.0 && self.eps_w > 0.0) {
            return Err(Error::config("sigma_z and eps_w must be positive"));
        }
        Ok(())
    }
}

/// A reprojected source sample: continuous target position, radial depth
/// from the target camera and color.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplatSample {
    pub u: f64,
    pub v: f64,
    pub z: f64,
    pub color: Rgb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplatOutput {
    pub width: usize,
    pub height: usize,
    pub color: Vec<Rgb>,
    pub depth: Vec<f64>,
    /// Summed bilinear coverage per target pixel.
    pub weight: Vec<f64>,
    /// `true` where the pixel received enough coverage.
    pub filled: Vec<bool>,
}

/// Bilinear taps at or below this weight are rounding noise; a nearer
/// sample would otherwise win a pixel it barely touches.
const MIN_TAP: f64 = 1e-9;

/// Splats samples onto a `width × height` raster. When `wrap_u` is set the
/// columns are periodic (ERP longitude).
pub fn splat(width: usize, height: usize, wrap_u: bool, samples: &[SplatSample], params: SplatParams) -> SplatOutput {
    let n = width * height;
    let taps = |s: &SplatSample| -> [(Option<usize>, f64); 4] {
        let u0 = s.u.floor();
        let v0 = s.v.floor();
        let fu = s.u - u0;
        let fv = s.v - v0;
        let col = |c: f64| -> Option<usize> {
            if wrap_u {
                Some((c.rem_euclid(width as f64) as usize).min(width - 1))
            } else if c >= 0.0 && c < width as f64 {
                Some(c as usize)
            } else {
                None
            }
        };
        let row = |r: f64| -> Option<usize> { (r >= 0.0 && r < height as f64).then_some(r as usize) };
        let idx = |c: f64, r: f64| Some(row(r)? * width + col(c)?);
        [
            (idx(u0, v0), (1.0 - fu) * (1.0 - fv)),
            (idx(u0 + 1.0, v0), fu * (1.0 - fv)),
            (idx(u0, v0 + 1.0), (1.0 - fu) * fv),
            (idx(u0 + 1.0, v0 + 1.0), fu * fv),
        ]
    };

    // The soft z-buffer weight is normalised per target, so it can be taken
    // relative to the nearest contribution without changing the result.
    let mut z_near = vec![f64::INFINITY; n];
    for s in samples {
        for (i, w) in taps(s) {
            if let Some(i) = i {
                if w > MIN_TAP && s.z < z_near[i] {
                    z_near[i] = s.z;
                }
            }
        }
    }

    let mut coverage = vec![0.0f64; n];
    let mut wsum = vec![0.0f64; n];
    let mut csum = vec![[0.0f64; 3]; n];
    let mut zsum = vec![0.0f64; n];
    for s in samples {
        for (i, w) in taps(s) {
            let Some(i) = i else { continue };
            if w <= MIN_TAP {
                continue;
            }
            let wz = w * (-(s.z - z_near[i]) / params.sigma_z).exp();
            coverage[i] += w;
            wsum[i] += wz;
            for k in 0..3 {
                csum[i][k] += wz * s.color[k] as f64;
            }
            zsum[i] += wz * s.z;
        }
    }

    let mut color = vec![[0.0f32; 3]; n];
    let mut depth = vec![0.0f64; n];
    let mut filled = vec![false; n];
    for i in 0..n {
        if coverage[i] >= params.eps_w && wsum[i] > 0.0 {
            filled[i] = true;
            for k in 0..3 {
                color[i][k] = ((csum[i][k] / wsum[i]) as f32).clamp(0.0, 1.0);
            }
            depth[i] = zsum[i] / wsum[i];
        }
    }
    SplatOutput { width, height, color, depth, weight: coverage, filled }
}

/// A synthesized ERP view.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthView {
    pub baseline: Baseline,
    pub image: ErpImage,
    /// Radial depth from the translated camera; holes are invalid.
    pub depth: DepthMap,
    pub weight: Vec<f64>,
    /// Pixels that received a splat (not holes).
    pub mask: Vec<bool>,
}

/// Renders `src` as seen from a camera translated by `baseline`.
pub fn forward_splat(
    src: &ErpImage,
    src_depth: &DepthMap,
    baseline: Baseline,
    params: SplatParams,
) -> Result<SynthView> {
    params.validate()?;
    let grid = src.grid();
    if src_depth.grid() != grid {
        return Err(Error::config("image and depth map dimensions differ"));
    }
    if src_depth.valid_count() == 0 {
        return Err(Error::numerical("source depth map has no valid pixels"));
    }
    let w = grid.width;
    let samples: Vec<SplatSample> = (0..grid.height)
        .into_par_iter()
        .flat_map_iter(|row| {
            (0..w).filter_map(move |col| {
                let z = src_depth.depth_at(col, row)?;
                let p = PixelCoord::new(col as f64, row as f64);
                let r = exact_reproject(p, z, baseline, grid).ok()?;
                Some(SplatSample { u: r.pixel.u, v: r.pixel.v, z: r.depth, color: src.get(col, row) })
            })
        })
        .collect();
    let out = splat(grid.width, grid.height, true, &samples, params);
    let image = ErpImage::new(grid, out.color)?;
    // Reprojected depths may leave the source range; keep them as holes then.
    let depth = DepthMap::with_mask(grid, out.depth, out.filled, src_depth.d_min(), src_depth.d_max())?;
    let mask = depth.mask().to_vec();
    Ok(SynthView { baseline, image, depth, weight: out.weight, mask })
}

/// One synthesized view per baseline.
pub fn synthesize_views(
    src: &ErpImage,
    src_depth: &DepthMap,
    baselines: &[Baseline],
    params: SplatParams,
) -> Result<Vec<SynthView>> {
    if baselines.is_empty() {
        return Err(Error::config("at least one baseline is required"));
    }
    baselines.iter().map(|b| forward_splat(src, src_depth, *b, params)).collect()
}

/// Forward splatting of a pinhole RGB-D view into the same pinhole camera
/// translated by `baseline`. Returns the image and its filled mask.
pub fn forward_splat_persp(
    src: &PerspImage,
    depth: &PerspDepth,
    baseline: Baseline,
    params: SplatParams,
) -> Result<(PerspImage, Vec<bool>)> {
    params.validate()?;
    let cam = src.camera;
    if depth.camera != cam {
        return Err(Error::config("image and depth crops use different cameras"));
    }
    if baseline.is_zero() {
        return Ok((src.clone(), depth.valid.clone()));
    }
    let t = baseline.translation();
    let mut samples = Vec::with_capacity(cam.len());
    for j in 0..cam.height {
        for i in 0..cam.width {
            let k = j * cam.width + i;
            if !depth.valid[k] {
                continue;
            }
            let p = cam.ray(i as f64, j as f64) * depth.depth[k] - t;
            if let Some((u, v)) = cam.project(p) {
                samples.push(SplatSample { u, v, z: p.norm(), color: src.pixels[k] });
            }
        }
    }
    let out = splat(cam.width, cam.height, false, &samples, params);
    Ok((PerspImage { camera: cam, pixels: out.color }, out.filled))
}
