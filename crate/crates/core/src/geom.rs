//! Spherical geometry for equirectangular (ERP) panoramas.
//!
//! Camera frame: `y` is the vertical axis, `z` points forward, `x` to the
//! right. Longitude `phi = atan2(x, z)` lies in `(-pi, pi]`, the polar angle
//! `theta` (colatitude) in `[0, pi]`, measured from `+y`.
//!
//! Pixel convention: integer `(u, v)` address pixel centres, so
//! `u = (phi / 2pi + 0.5) * W - 0.5` and `v = theta / pi * H - 0.5`.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        self * (1.0 / self.norm())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn component(self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

/// Spherical coordinates: radial distance, longitude and polar angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphCoord {
    pub r: f64,
    pub phi: f64,
    pub theta: f64,
}

impl SphCoord {
    pub fn new(r: f64, phi: f64, theta: f64) -> Self {
        Self { r, phi, theta }
    }

    /// Latitude in `[-pi/2, pi/2]`, positive towards `+y`.
    pub fn latitude(&self) -> f64 {
        PI / 2.0 - self.theta
    }
}

/// Continuous pixel position; integers address pixel centres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelCoord {
    pub u: f64,
    pub v: f64,
}

impl PixelCoord {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Translation along `y`.
    Vertical,
    /// Translation along `x`.
    Horizontal,
}

/// Signed camera translation along one axis, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub axis: Axis,
    pub offset: f64,
}

impl Baseline {
    pub fn vertical(offset: f64) -> Self {
        Self { axis: Axis::Vertical, offset }
    }

    pub fn horizontal(offset: f64) -> Self {
        Self { axis: Axis::Horizontal, offset }
    }

    /// Camera translation as a vector.
    pub fn translation(&self) -> Vec3 {
        match self.axis {
            Axis::Vertical => Vec3::new(0.0, self.offset, 0.0),
            Axis::Horizontal => Vec3::new(self.offset, 0.0, 0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.offset == 0.0
    }
}

pub fn cart_to_sph(p: Vec3) -> Result<SphCoord> {
    if !p.is_finite() {
        return Err(Error::domain("non-finite point"));
    }
    let r = p.norm();
    if r == 0.0 {
        return Err(Error::domain("zero-length point has no direction"));
    }
    let planar = p.x.hypot(p.z);
    let phi = if planar == 0.0 { 0.0 } else { wrap_longitude(p.x.atan2(p.z)) };
    // Same value as acos(y / r), but stays accurate near the poles.
    let theta = planar.atan2(p.y);
    Ok(SphCoord { r, phi, theta })
}

pub fn sph_to_cart(s: SphCoord) -> Vec3 {
    let (sp, cp) = s.phi.sin_cos();
    let (st, ct) = s.theta.sin_cos();
    Vec3::new(s.r * sp * st, s.r * ct, s.r * cp * st)
}

/// Unit direction for a longitude / polar angle pair.
pub fn direction(phi: f64, theta: f64) -> Vec3 {
    sph_to_cart(SphCoord::new(1.0, phi, theta))
}

/// Maps any angle into `(-pi, pi]`.
pub fn wrap_longitude(phi: f64) -> f64 {
    let w = (phi + PI).rem_euclid(TAU) - PI;
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// Dimensions of an equirectangular raster; `width == 2 * height`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErpGrid {
    pub width: usize,
    pub height: usize,
}

impl ErpGrid {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if height == 0 || width != 2 * height {
            return Err(Error::config(format!(
                "equirectangular raster must have width = 2 * height, got {width}x{height}"
            )));
        }
        Ok(Self { width, height })
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Continuous pixel for a direction; `u` is wrapped into `[0, W)`.
    pub fn sph_to_pixel(&self, s: SphCoord) -> PixelCoord {
        let w = self.width as f64;
        let h = self.height as f64;
        let u = ((s.phi / TAU + 0.5) * w - 0.5).rem_euclid(w);
        let v = s.theta / PI * h - 0.5;
        PixelCoord { u, v }
    }

    /// Spherical coordinate of a (continuous) pixel at radial distance `r`.
    pub fn pixel_to_sph(&self, p: PixelCoord, r: f64) -> SphCoord {
        let phi = wrap_longitude(((p.u + 0.5) / self.width as f64 - 0.5) * TAU);
        let theta = (p.v + 0.5) / self.height as f64 * PI;
        SphCoord { r, phi, theta }
    }

    pub fn pixel_center_sph(&self, col: usize, row: usize, r: f64) -> SphCoord {
        self.pixel_to_sph(PixelCoord::new(col as f64, row as f64), r)
    }

    /// Polar angle of a row centre.
    pub fn row_theta(&self, row: usize) -> f64 {
        (row as f64 + 0.5) / self.height as f64 * PI
    }

    /// Latitude of a row centre, in `[-pi/2, pi/2]`.
    pub fn row_latitude(&self, row: usize) -> f64 {
        PI / 2.0 - self.row_theta(row)
    }

    /// Pixels per radian of polar angle.
    pub fn rows_per_radian(&self) -> f64 {
        self.height as f64 / PI
    }

    /// Pixels per radian of longitude.
    pub fn cols_per_radian(&self) -> f64 {
        self.width as f64 / TAU
    }
}

/// Linearised polar-angle change of a point displaced by `b_y` along the
/// vertical axis: `dtheta = -sin(theta) / r * b_y`. Longitude is unchanged.
pub fn vertical_disparity(theta: f64, r: f64, b_y: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("radial depth must be positive, got {r}")));
    }
    Ok(-theta.sin() / r * b_y)
}

/// Latitudinal part of the horizontal model, defined everywhere (including
/// the poles): `dtheta = sin(phi) cos(theta) / r * b_x`.
pub fn horizontal_dtheta(phi: f64, theta: f64, r: f64, b_x: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("radial depth must be positive, got {r}")));
    }
    Ok(phi.sin() * theta.cos() / r * b_x)
}

/// Linearised `(dphi, dtheta)` of a point displaced by `b_x` along `x`.
///
/// `dphi = cos(phi) / (r sin(theta)) * b_x` is singular at the poles, where
/// this returns a domain error; [`horizontal_dtheta`] still applies there.
pub fn horizontal_disparity(phi: f64, theta: f64, r: f64, b_x: f64) -> Result<(f64, f64)> {
    let dtheta = horizontal_dtheta(phi, theta, r, b_x)?;
    let st = theta.sin();
    if st.abs() < 1e-12 {
        return Err(Error::domain("longitudinal disparity is singular at the poles"));
    }
    let dphi = phi.cos() / (r * st) * b_x;
    Ok((dphi, dtheta))
}

/// Where a target-view pixel at radial `depth` lands in a camera translated by
/// `baseline`, with its radial distance from that camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reprojection {
    pub pixel: PixelCoord,
    pub depth: f64,
}

/// Exact (non-linearised) reprojection of a pixel into a translated camera.
pub fn exact_reproject(p: PixelCoord, depth: f64, baseline: Baseline, grid: ErpGrid) -> Result<Reprojection> {
    if !(depth > 0.0) {
        return Err(Error::domain(format!("depth must be positive, got {depth}")));
    }
    if baseline.is_zero() {
        return Ok(Reprojection { pixel: p, depth });
    }
    let world = sph_to_cart(grid.pixel_to_sph(p, depth));
    let moved = world - baseline.translation();
    if moved.norm() <= 1e-12 * depth.max(1.0) {
        return Err(Error::domain("point coincides with the translated camera centre"));
    }
    let s = cart_to_sph(moved)?;
    Ok(Reprojection { pixel: grid.sph_to_pixel(s), depth: s.r })
}
