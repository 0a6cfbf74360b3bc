//! Per-pixel matching descriptors.

use serde::{Deserialize, Serialize};

use crate::geom::ErpGrid;
use crate::image::{wrap_taps, ErpImage};

/// Descriptor used to compare the target with warped references.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Descriptor {
    /// Raw colour.
    Rgb,
    /// 5x5 census transform of luma, one binary channel per neighbour.
    #[default]
    Census5x5,
    /// Zero-mean, unit-norm 5x5 luma patch.
    Zncc,
}

const RADIUS: isize = 2;

impl Descriptor {
    pub fn channels(self) -> usize {
        match self {
            Descriptor::Rgb => 3,
            Descriptor::Census5x5 => 24,
            Descriptor::Zncc => 25,
        }
    }

    /// Half-width of the pixel neighbourhood the descriptor reads.
    pub fn radius(self) -> usize {
        match self {
            Descriptor::Rgb => 0,
            Descriptor::Census5x5 | Descriptor::Zncc => RADIUS as usize,
        }
    }
}

/// Pixel-major feature raster: channel `c` of pixel `i` is `data[i * C + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    grid: ErpGrid,
    descriptor: Descriptor,
    data: Vec<f32>,
}

impl FeatureMap {
    pub(crate) fn from_raw(grid: ErpGrid, descriptor: Descriptor, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), grid.len() * descriptor.channels());
        Self { grid, descriptor, data }
    }

    pub fn grid(&self) -> ErpGrid {
        self.grid
    }

    pub fn descriptor(&self) -> Descriptor {
        self.descriptor
    }

    pub fn channels(&self) -> usize {
        self.descriptor.channels()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn pixel(&self, i: usize) -> &[f32] {
        let c = self.channels();
        &self.data[i * c..(i + 1) * c]
    }

    /// Bilinear sample at a continuous pixel, wrapping in `u`. Positions
    /// between the outer row centres and the poles (half a row) use the
    /// outer row. Returns false (leaving `out` unspecified) when `v` leaves
    /// the sphere or a tap with non-zero weight is invalid.
    pub fn sample(&self, u: f64, v: f64, valid: Option<&[bool]>, out: &mut [f32]) -> bool {
        let ErpGrid { width, height } = self.grid;
        if !(v >= -0.5 && v <= height as f64 - 0.5) || !u.is_finite() {
            return false;
        }
        let v = v.clamp(0.0, (height - 1) as f64);
        let (c0, c1, fu) = wrap_taps(u, width);
        let r0 = (v.floor() as usize).min(height - 1);
        let r1 = (r0 + 1).min(height - 1);
        let fv = v - r0 as f64;
        let taps = [
            (r0 * width + c0, (1.0 - fu) * (1.0 - fv)),
            (r0 * width + c1, fu * (1.0 - fv)),
            (r1 * width + c0, (1.0 - fu) * fv),
            (r1 * width + c1, fu * fv),
        ];
        out.iter_mut().for_each(|x| *x = 0.0);
        let ch = self.channels();
        for (idx, w) in taps {
            if w <= 0.0 {
                continue;
            }
            if let Some(mask) = valid {
                if !mask[idx] {
                    return false;
                }
            }
            let w = w as f32;
            for (o, f) in out.iter_mut().zip(&self.data[idx * ch..(idx + 1) * ch]) {
                *o += w * f;
            }
        }
        true
    }
}

fn luma_at(luma: &[f32], grid: ErpGrid, col: usize, row: usize, dc: isize, dr: isize) -> f32 {
    let w = grid.width as isize;
    let c = (col as isize + dc).rem_euclid(w) as usize;
    let r = (row as isize + dr).clamp(0, grid.height as isize - 1) as usize;
    luma[r * grid.width + c]
}

/// Computes descriptors for every pixel. Neighbourhoods wrap in longitude
/// and replicate the first and last rows.
pub fn extract_features(img: &ErpImage, descriptor: Descriptor) -> FeatureMap {
    let grid = img.grid();
    let ch = descriptor.channels();
    let mut data = Vec::with_capacity(grid.len() * ch);
    match descriptor {
        Descriptor::Rgb => {
            for p in img.pixels() {
                data.extend_from_slice(p);
            }
        }
        Descriptor::Census5x5 => {
            let luma = img.luma();
            for row in 0..grid.height {
                for col in 0..grid.width {
                    let centre = luma[row * grid.width + col];
                    for dr in -RADIUS..=RADIUS {
                        for dc in -RADIUS..=RADIUS {
                            if dr == 0 && dc == 0 {
                                continue;
                            }
                            let n = luma_at(&luma, grid, col, row, dc, dr);
                            data.push(if n < centre { 1.0 } else { 0.0 });
                        }
                    }
                }
            }
        }
        Descriptor::Zncc => {
            let luma = img.luma();
            let mut patch = [0.0f32; 25];
            for row in 0..grid.height {
                for col in 0..grid.width {
                    let mut k = 0;
                    for dr in -RADIUS..=RADIUS {
                        for dc in -RADIUS..=RADIUS {
                            patch[k] = luma_at(&luma, grid, col, row, dc, dr);
                            k += 1;
                        }
                    }
                    let mean = patch.iter().sum::<f32>() / 25.0;
                    let norm = patch.iter().map(|x| (x - mean) * (x - mean)).sum::<f32>().sqrt();
                    if norm < 1e-6 {
                        data.extend_from_slice(&[0.0; 25]);
                    } else {
                        data.extend(patch.iter().map(|x| (x - mean) / norm));
                    }
                }
            }
        }
    }
    FeatureMap { grid, descriptor, data }
}
