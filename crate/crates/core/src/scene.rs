//! Analytic scenes and ERP RGB-D ray casting.
//!
//! Primitives are thin surfaces: a camera may sit inside a sphere or box (a
//! room), but never on a surface. Textures are solid (3-D) so every primitive
//! shares the same texturing code.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{direction, ErpGrid, Vec3};
use crate::image::{check_range, DepthMap, ErpImage, Rgb};

/// Minimum hit distance and camera-to-surface clearance, meters.
pub const SURFACE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Sphere { center: Vec3, radius: f64 },
    AxisAlignedBox { min: Vec3, max: Vec3 },
    Plane { point: Vec3, normal: Vec3 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Texture {
    /// 3-D checkerboard with cubic cells of side `scale` meters.
    Checker { scale: f64, colors: [Rgb; 2] },
    /// Three-octave value noise; `scale` is the coarsest feature size in meters.
    ValueNoise { seed: u64, scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub shape: Shape,
    pub texture: Texture,
}

fn default_range() -> [f64; 2] {
    [0.2, 8.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub primitives: Vec<Primitive>,
    /// Color of rays that hit nothing; such pixels carry no valid depth.
    #[serde(default)]
    pub background: Rgb,
    /// Depth range `[d_min, d_max]` of rendered depth maps.
    #[serde(default = "default_range")]
    pub depth_range: [f64; 2],
    /// Camera positions stored with the scene (the first is the default).
    #[serde(default)]
    pub cameras: Vec<Vec3>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    /// Distance along the unit ray.
    pub t: f64,
    pub color: Rgb,
}

impl Shape {
    /// Nearest intersection distance `t > SURFACE_EPS` along a unit ray.
    pub fn intersect(&self, origin: Vec3, dir: Vec3) -> Option<f64> {
        match *self {
            Shape::Sphere { center, radius } => {
                let oc = origin - center;
                let b = oc.dot(dir);
                let c = oc.dot(oc) - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                // Numerically stable pair of roots.
                let q = if b > 0.0 { -b - sq } else { -b + sq };
                let (mut t0, mut t1) = if q != 0.0 { (q, c / q) } else { (-b, -b) };
                if t0 > t1 {
                    std::mem::swap(&mut t0, &mut t1);
                }
                [t0, t1].into_iter().find(|t| *t > SURFACE_EPS)
            }
            Shape::AxisAlignedBox { min, max } => {
                let mut t_near = f64::NEG_INFINITY;
                let mut t_far = f64::INFINITY;
                for k in 0..3 {
                    let o = origin.component(k);
                    let d = dir.component(k);
                    let (lo, hi) = (min.component(k), max.component(k));
                    if d == 0.0 {
                        if o < lo || o > hi {
                            return None;
                        }
                        continue;
                    }
                    let (a, b) = ((lo - o) / d, (hi - o) / d);
                    let (a, b) = if a < b { (a, b) } else { (b, a) };
                    t_near = t_near.max(a);
                    t_far = t_far.min(b);
                }
                if t_near > t_far {
                    return None;
                }
                [t_near, t_far].into_iter().find(|t| *t > SURFACE_EPS)
            }
            Shape::Plane { point, normal } => {
                let denom = dir.dot(normal);
                if denom == 0.0 {
                    return None;
                }
                let t = (point - origin).dot(normal) / denom;
                (t > SURFACE_EPS).then_some(t)
            }
        }
    }

    /// Unsigned distance from `p` to the surface.
    pub fn surface_distance(&self, p: Vec3) -> f64 {
        match *self {
            Shape::Sphere { center, radius } => ((p - center).norm() - radius).abs(),
            Shape::AxisAlignedBox { min, max } => {
                let mut outside = 0.0f64;
                let mut inside = f64::INFINITY;
                for k in 0..3 {
                    let (x, lo, hi) = (p.component(k), min.component(k), max.component(k));
                    let d = (lo - x).max(x - hi);
                    if d > 0.0 {
                        outside += d * d;
                    }
                    inside = inside.min((x - lo).abs().min((hi - x).abs()));
                }
                if outside > 0.0 {
                    outside.sqrt()
                } else {
                    inside
                }
            }
            Shape::Plane { point, normal } => (p - point).dot(normal).abs() / normal.norm(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Sphere { center, radius } => center.is_finite() && radius > 0.0 && radius.is_finite(),
            Shape::AxisAlignedBox { min, max } => {
                min.is_finite() && max.is_finite() && min.x < max.x && min.y < max.y && min.z < max.z
            }
            Shape::Plane { point, normal } => point.is_finite() && normal.is_finite() && normal.norm() > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("degenerate primitive {self:?}")))
        }
    }
}

impl Texture {
    pub fn color_at(&self, p: Vec3) -> Rgb {
        match *self {
            Texture::Checker { scale, colors } => {
                // Offset keeps axis-aligned faces at round coordinates away from cell borders.
                let cell = |x: f64| (x / scale + 0.2357).floor() as i64;
                let parity = (cell(p.x) + cell(p.y) + cell(p.z)).rem_euclid(2);
                colors[parity as usize]
            }
            Texture::ValueNoise { seed, scale } => {
                let mut out = [0.0f32; 3];
                for (ch, o) in out.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    let mut amp = 1.0;
                    let mut norm = 0.0;
                    for octave in 0..3u64 {
                        let f = (1u64 << octave) as f64 / scale;
                        acc += amp * value_noise(p * f, seed, ch as u64 * 16 + octave);
                        norm += amp;
                        amp *= 0.5;
                    }
                    // Stretch contrast: the octave sum concentrates around 0.5.
                    let n = ((acc / norm - 0.5) * 1.8 + 0.5).clamp(0.0, 1.0);
                    *o = (0.08 + 0.84 * n) as f32;
                }
                out
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let scale = match self {
            Texture::Checker { scale, .. } | Texture::ValueNoise { scale, .. } => *scale,
        };
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::config("texture scale must be positive"));
        }
        Ok(())
    }
}

fn hash3(x: i64, y: i64, z: i64, seed: u64, stream: u64) -> f64 {
    let mut h = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    for k in [x, y, z] {
        h ^= (k as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h = h.rotate_left(27).wrapping_mul(0x94D0_49BB_1331_11EB);
    }
    h ^= h >> 31;
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn value_noise(p: Vec3, seed: u64, stream: u64) -> f64 {
    let (fx, fy, fz) = (p.x.floor(), p.y.floor(), p.z.floor());
    let (ix, iy, iz) = (fx as i64, fy as i64, fz as i64);
    let s = |t: f64| t * t * (3.0 - 2.0 * t);
    let (tx, ty, tz) = (s(p.x - fx), s(p.y - fy), s(p.z - fz));
    let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
    let corner = |dx: i64, dy: i64, dz: i64| hash3(ix + dx, iy + dy, iz + dz, seed, stream);
    let x00 = lerp(corner(0, 0, 0), corner(1, 0, 0), tx);
    let x10 = lerp(corner(0, 1, 0), corner(1, 1, 0), tx);
    let x01 = lerp(corner(0, 0, 1), corner(1, 0, 1), tx);
    let x11 = lerp(corner(0, 1, 1), corner(1, 1, 1), tx);
    lerp(lerp(x00, x10, ty), lerp(x01, x11, ty), tz)
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.primitives.is_empty() {
            return Err(Error::config("scene needs at least one primitive"));
        }
        for p in &self.primitives {
            p.shape.validate()?;
            p.texture.validate()?;
        }
        check_range(self.depth_range[0], self.depth_range[1])
    }

    /// Rejects camera positions lying on a primitive surface.
    pub fn check_camera(&self, cam: Vec3) -> Result<()> {
        if !cam.is_finite() {
            return Err(Error::config("camera position must be finite"));
        }
        for (i, p) in self.primitives.iter().enumerate() {
            if p.shape.surface_distance(cam) < SURFACE_EPS {
                return Err(Error::config(format!("camera lies on the surface of primitive {i}")));
            }
        }
        Ok(())
    }

    /// Nearest hit along a unit ray.
    pub fn trace(&self, origin: Vec3, dir: Vec3) -> Option<Hit> {
        let mut best: Option<(f64, &Primitive)> = None;
        for p in &self.primitives {
            if let Some(t) = p.shape.intersect(origin, dir) {
                if best.map_or(true, |(bt, _)| t < bt) {
                    best = Some((t, p));
                }
            }
        }
        best.map(|(t, p)| Hit { t, color: p.texture.color_at(origin + dir * t) })
    }

    pub fn default_camera(&self) -> Vec3 {
        self.cameras.first().copied().unwrap_or(Vec3::ZERO)
    }
}

/// Renders the ERP color image and radial depth map seen from `cam`.
pub fn raycast_erp(scene: &SceneSpec, cam: Vec3, grid: ErpGrid) -> Result<(ErpImage, DepthMap)> {
    scene.validate()?;
    scene.check_camera(cam)?;
    let w = grid.width;
    let rows: Vec<(Vec<Rgb>, Vec<f64>, Vec<bool>)> = (0..grid.height)
        .into_par_iter()
        .map(|row| {
            let theta = grid.row_theta(row);
            let mut colors = Vec::with_capacity(w);
            let mut depth = Vec::with_capacity(w);
            let mut valid = Vec::with_capacity(w);
            for col in 0..w {
                let phi = grid.pixel_center_sph(col, row, 1.0).phi;
                match scene.trace(cam, direction(phi, theta)) {
                    Some(hit) => {
                        colors.push(hit.color);
                        depth.push(hit.t);
                        valid.push(true);
                    }
                    None => {
                        colors.push(scene.background);
                        depth.push(0.0);
                        valid.push(false);
                    }
                }
            }
            (colors, depth, valid)
        })
        .collect();
    let mut pixels = Vec::with_capacity(grid.len());
    let mut depth = Vec::with_capacity(grid.len());
    let mut valid = Vec::with_capacity(grid.len());
    for (c, d, v) in rows {
        pixels.extend(c);
        depth.extend(d);
        valid.extend(v);
    }
    let [d_min, d_max] = scene.depth_range;
    Ok((ErpImage::new(grid, pixels)?, DepthMap::with_mask(grid, depth, valid, d_min, d_max)?))
}

fn noise(seed: u64, scale: f64) -> Texture {
    Texture::ValueNoise { seed, scale }
}

fn checker(scale: f64, a: Rgb, b: Rgb) -> Texture {
    Texture::Checker { scale, colors: [a, b] }
}

fn sphere(center: [f64; 3], radius: f64, texture: Texture) -> Primitive {
    Primitive { shape: Shape::Sphere { center: center.into(), radius }, texture }
}

fn cuboid(min: [f64; 3], max: [f64; 3], texture: Texture) -> Primitive {
    Primitive { shape: Shape::AxisAlignedBox { min: min.into(), max: max.into() }, texture }
}

/// Names accepted by [`builtin_scene`].
pub const BUILTIN_SCENES: [&str; 4] = ["checker_sphere", "room", "lounge", "hall"];

/// The fixed evaluation suite.
pub const SCENE_SUITE: [&str; 3] = ["room", "lounge", "hall"];

/// Built-in analytic scenes. All keep every surface within the default
/// `[0.2, 8]` m range of a camera at the origin.
pub fn builtin_scene(name: &str) -> Result<SceneSpec> {
    let primitives = match name {
        // Off-centre checkered sphere enclosing two checkered balls.
        "checker_sphere" => vec![
            sphere([0.25, -0.15, 0.3], 3.2, checker(0.3, [0.15, 0.2, 0.3], [0.85, 0.8, 0.65])),
            sphere([1.3, 0.2, 1.1], 0.45, checker(0.1, [0.8, 0.25, 0.2], [0.95, 0.9, 0.8])),
            sphere([-1.2, -0.6, -0.8], 0.5, checker(0.12, [0.1, 0.4, 0.2], [0.7, 0.9, 0.6])),
        ],
        // Box room with a table-like block and two balls.
        "room" => vec![
            cuboid([-2.6, -1.3, -3.1], [2.9, 1.5, 3.4], noise(11, 0.45)),
            cuboid([0.7, -1.3, 0.6], [1.6, -0.55, 1.8], noise(12, 0.25)),
            sphere([-1.1, -0.2, 1.4], 0.4, noise(13, 0.2)),
            sphere([0.9, 0.3, -1.5], 0.55, checker(0.15, [0.2, 0.25, 0.5], [0.9, 0.85, 0.7])),
        ],
        // Smaller room, camera close to one wall, objects at varied depths.
        "lounge" => vec![
            cuboid([-1.8, -1.1, -1.2], [3.6, 1.7, 4.2], noise(21, 0.4)),
            cuboid([-1.0, -1.1, 1.5], [0.2, -0.4, 2.4], noise(22, 0.2)),
            cuboid([2.0, -1.1, -0.8], [3.0, 0.6, 0.2], noise(23, 0.25)),
            sphere([0.6, 0.5, -0.6], 0.3, noise(24, 0.12)),
            sphere([-0.9, -0.5, -0.4], 0.35, noise(25, 0.15)),
        ],
        // Long hall with pillars.
        "hall" => vec![
            cuboid([-2.0, -1.5, -6.5], [2.2, 1.8, 6.0], noise(31, 0.5)),
            cuboid([-1.4, -1.5, 1.2], [-0.9, 1.8, 1.7], noise(32, 0.2)),
            cuboid([0.9, -1.5, -2.6], [1.4, 1.8, -2.1], noise(33, 0.2)),
            sphere([0.8, -0.9, 2.4], 0.5, noise(34, 0.2)),
            sphere([-0.7, 0.6, -1.3], 0.35, noise(35, 0.15)),
        ],
        _ => return Err(Error::config(format!("unknown scene {name:?}; known scenes: {}", BUILTIN_SCENES.join(", ")))),
    };
    Ok(SceneSpec { primitives, background: [0.0; 3], depth_range: default_range(), cameras: vec![Vec3::ZERO] })
}
