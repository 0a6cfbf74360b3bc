//! Raster types shared by every stage: RGB panoramas, depth maps and masks.

use crate::error::{Error, Result};
use crate::geom::ErpGrid;

pub type Rgb = [f32; 3];

/// Equirectangular RGB image, channels in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ErpImage {
    grid: ErpGrid,
    pixels: Vec<Rgb>,
}

impl ErpImage {
    pub fn new(grid: ErpGrid, pixels: Vec<Rgb>) -> Result<Self> {
        if pixels.len() != grid.len() {
            return Err(Error::config(format!("pixel buffer has {} entries, expected {}", pixels.len(), grid.len())));
        }
        if pixels.iter().flatten().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::config("image channels must be finite and in [0, 1]"));
        }
        Ok(Self { grid, pixels })
    }

    pub fn filled(grid: ErpGrid, color: Rgb) -> Self {
        Self { grid, pixels: vec![color; grid.len()] }
    }

    pub fn from_fn(grid: ErpGrid, mut f: impl FnMut(usize, usize) -> Rgb) -> Self {
        let mut pixels = Vec::with_capacity(grid.len());
        for row in 0..grid.height {
            for col in 0..grid.width {
                pixels.push(clamp_rgb(f(col, row)));
            }
        }
        Self { grid, pixels }
    }

    pub fn grid(&self) -> ErpGrid {
        self.grid
    }

    pub fn width(&self) -> usize {
        self.grid.width
    }

    pub fn height(&self) -> usize {
        self.grid.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn get(&self, col: usize, row: usize) -> Rgb {
        self.pixels[row * self.grid.width + col]
    }

    /// Bilinear sample with longitude wrap-around. Rows are clamped to the
    /// image, which is adequate for resampling but not for matching.
    pub fn sample_clamped(&self, u: f64, v: f64) -> Rgb {
        let w = self.grid.width;
        let h = self.grid.height;
        let v = v.clamp(0.0, (h - 1) as f64);
        let (c0, c1, fu) = wrap_taps(u, w);
        let r0 = v.floor() as usize;
        let r1 = (r0 + 1).min(h - 1);
        let fv = (v - r0 as f64) as f32;
        let fu = fu as f32;
        let mut out = [0.0f32; 3];
        for (k, o) in out.iter_mut().enumerate() {
            let top = self.get(c0, r0)[k] * (1.0 - fu) + self.get(c1, r0)[k] * fu;
            let bot = self.get(c0, r1)[k] * (1.0 - fu) + self.get(c1, r1)[k] * fu;
            *o = top * (1.0 - fv) + bot * fv;
        }
        out
    }

    /// Luma (Rec. 601 weights) per pixel.
    pub fn luma(&self) -> Vec<f32> {
        self.pixels.iter().map(|p| luma(*p)).collect()
    }
}

pub fn luma(p: Rgb) -> f32 {
    0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]
}

pub(crate) fn clamp_rgb(c: Rgb) -> Rgb {
    let f = |x: f32| if x.is_finite() { x.clamp(0.0, 1.0) } else { 0.0 };
    [f(c[0]), f(c[1]), f(c[2])]
}

/// Column taps and fractional weight for a wrapped horizontal coordinate.
#[inline]
pub(crate) fn wrap_taps(u: f64, width: usize) -> (usize, usize, f64) {
    let w = width as f64;
    let u = u.rem_euclid(w);
    let f = u.floor();
    let c0 = (f as usize).min(width - 1);
    let c1 = if c0 + 1 == width { 0 } else { c0 + 1 };
    (c0, c1, u - f)
}

/// Radial depth per pixel with a validity mask and the working depth range.
///
/// Valid pixels always satisfy `d_min <= depth <= d_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    grid: ErpGrid,
    depth: Vec<f64>,
    valid: Vec<bool>,
    d_min: f64,
    d_max: f64,
}

impl DepthMap {
    /// Builds a map from raw values; pixels that are non-finite or outside the
    /// range are marked invalid.
    pub fn from_depths(grid: ErpGrid, depth: Vec<f64>, d_min: f64, d_max: f64) -> Result<Self> {
        let valid = vec![true; depth.len()];
        Self::with_mask(grid, depth, valid, d_min, d_max)
    }

    /// Like [`DepthMap::from_depths`], additionally masked by `valid`.
    pub fn with_mask(grid: ErpGrid, depth: Vec<f64>, mut valid: Vec<bool>, d_min: f64, d_max: f64) -> Result<Self> {
        check_range(d_min, d_max)?;
        if depth.len() != grid.len() || valid.len() != grid.len() {
            return Err(Error::config("depth or mask buffer does not match the grid"));
        }
        for (ok, d) in valid.iter_mut().zip(&depth) {
            *ok = *ok && d.is_finite() && *d >= d_min && *d <= d_max;
        }
        Ok(Self { grid, depth, valid, d_min, d_max })
    }

    pub fn constant(grid: ErpGrid, value: f64, d_min: f64, d_max: f64) -> Result<Self> {
        Self::from_depths(grid, vec![value; grid.len()], d_min, d_max)
    }

    pub fn grid(&self) -> ErpGrid {
        self.grid
    }

    pub fn width(&self) -> usize {
        self.grid.width
    }

    pub fn height(&self) -> usize {
        self.grid.height
    }

    pub fn depths(&self) -> &[f64] {
        &self.depth
    }

    pub fn mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn depth_at(&self, col: usize, row: usize) -> Option<f64> {
        let i = row * self.grid.width + col;
        self.valid[i].then_some(self.depth[i])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Same values under a different working range (validity re-evaluated).
    pub fn with_range(&self, d_min: f64, d_max: f64) -> Result<Self> {
        Self::with_mask(self.grid, self.depth.clone(), self.valid.clone(), d_min, d_max)
    }
}

pub(crate) fn check_range(d_min: f64, d_max: f64) -> Result<()> {
    if !(d_min > 0.0 && d_max > d_min && d_max.is_finite()) {
        return Err(Error::config(format!("depth range must satisfy 0 < d_min < d_max, got [{d_min}, {d_max}]")));
    }
    Ok(())
}
