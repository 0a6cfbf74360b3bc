//! Pinhole views cut out of equirectangular panoramas.

use crate::error::{Error, Result};
use crate::geom::{cart_to_sph, Vec3};
use crate::image::{DepthMap, ErpImage, Rgb};

/// Pinhole camera with square pixels, looking along `yaw` (about `+y`,
/// towards `+x`) and `pitch` (towards `+y`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerspCamera {
    pub width: usize,
    pub height: usize,
    /// Horizontal field of view, degrees.
    pub fov_deg: f64,
    pub yaw: f64,
    pub pitch: f64,
}

impl PerspCamera {
    pub fn new(width: usize, height: usize, fov_deg: f64, yaw: f64, pitch: f64) -> Result<Self> {
        if !(fov_deg > 0.0 && fov_deg < 180.0) {
            return Err(Error::config(format!("field of view must be in (0, 180) degrees, got {fov_deg}")));
        }
        if width == 0 || height == 0 {
            return Err(Error::config("perspective image must be non-empty"));
        }
        Ok(Self { width, height, fov_deg, yaw, pitch })
    }

    /// Focal length in pixels.
    pub fn focal(&self) -> f64 {
        self.width as f64 / 2.0 / (self.fov_deg.to_radians() / 2.0).tan()
    }

    fn to_world(self, c: Vec3) -> Vec3 {
        let (sp, cp) = self.pitch.sin_cos();
        let (sy, cy) = self.yaw.sin_cos();
        let y = c.y * cp + c.z * sp;
        let z = -c.y * sp + c.z * cp;
        Vec3::new(c.x * cy + z * sy, y, -c.x * sy + z * cy)
    }

    fn to_camera(self, w: Vec3) -> Vec3 {
        let (sp, cp) = self.pitch.sin_cos();
        let (sy, cy) = self.yaw.sin_cos();
        let x = w.x * cy - w.z * sy;
        let z = w.x * sy + w.z * cy;
        Vec3::new(x, w.y * cp - z * sp, w.y * sp + z * cp)
    }

    /// Unit world-frame ray through a continuous pixel (integers are centres).
    pub fn ray(&self, i: f64, j: f64) -> Vec3 {
        let f = self.focal();
        let x = (i + 0.5 - self.width as f64 / 2.0) / f;
        let y = -(j + 0.5 - self.height as f64 / 2.0) / f;
        self.to_world(Vec3::new(x, y, 1.0)).normalized()
    }

    /// Continuous pixel of a camera-relative point, if it lies in front.
    pub fn project(&self, p: Vec3) -> Option<(f64, f64)> {
        let c = self.to_camera(p);
        if c.z <= 1e-12 {
            return None;
        }
        let f = self.focal();
        let i = f * c.x / c.z + self.width as f64 / 2.0 - 0.5;
        let j = -f * c.y / c.z + self.height as f64 / 2.0 - 0.5;
        Some((i, j))
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerspImage {
    pub camera: PerspCamera,
    pub pixels: Vec<Rgb>,
}

/// Radial depth of a pinhole view with validity.
#[derive(Debug, Clone, PartialEq)]
pub struct PerspDepth {
    pub camera: PerspCamera,
    pub depth: Vec<f64>,
    pub valid: Vec<bool>,
}

/// Resamples an ERP image into a pinhole view (bilinear).
pub fn perspective_crop(img: &ErpImage, camera: PerspCamera) -> PerspImage {
    let grid = img.grid();
    let mut pixels = Vec::with_capacity(camera.len());
    for j in 0..camera.height {
        for i in 0..camera.width {
            let d = camera.ray(i as f64, j as f64);
            let s = cart_to_sph(d).expect("unit ray");
            let p = grid.sph_to_pixel(s);
            pixels.push(img.sample_clamped(p.u, p.v));
        }
    }
    PerspImage { camera, pixels }
}

/// Nearest-neighbour depth crop; interpolating across depth edges would
/// invent surfaces.
pub fn perspective_crop_depth(depth: &DepthMap, camera: PerspCamera) -> PerspDepth {
    let grid = depth.grid();
    let mut out = Vec::with_capacity(camera.len());
    let mut valid = Vec::with_capacity(camera.len());
    for j in 0..camera.height {
        for i in 0..camera.width {
            let d = camera.ray(i as f64, j as f64);
            let s = cart_to_sph(d).expect("unit ray");
            let p = grid.sph_to_pixel(s);
            let col = (p.u.round() as usize) % grid.width;
            let row = (p.v.round().max(0.0) as usize).min(grid.height - 1);
            match depth.depth_at(col, row) {
                Some(z) => {
                    out.push(z);
                    valid.push(true);
                }
                None => {
                    out.push(0.0);
                    valid.push(false);
                }
            }
        }
    }
    PerspDepth { camera, depth: out, valid }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::ErpGrid;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn rejects_bad_fov() {
        assert!(PerspCamera::new(10, 10, 0.0, 0.0, 0.0).is_err());
        assert!(PerspCamera::new(10, 10, 180.0, 0.0, 0.0).is_err());
        assert!(PerspCamera::new(10, 10, 90.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn optical_axis_hits_erp_centre() {
        let cam = PerspCamera::new(64, 48, 90.0, 0.0, 0.0).unwrap();
        let d = cam.ray(31.5, 23.5);
        let s = cart_to_sph(d).unwrap();
        assert_abs_diff_eq!(s.phi, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.theta, PI / 2.0, epsilon = 1e-12);
        let grid = ErpGrid::new(512, 256).unwrap();
        let p = grid.sph_to_pixel(s);
        assert_abs_diff_eq!(p.u, 255.5, epsilon = 1e-9);
        assert_abs_diff_eq!(p.v, 127.5, epsilon = 1e-9);
    }

    #[test]
    fn yaw_and_pitch_turn_the_axis() {
        let cam = PerspCamera::new(65, 65, 60.0, PI / 2.0, 0.0).unwrap();
        let d = cam.ray(32.0, 32.0);
        assert_abs_diff_eq!(d.x, 1.0, epsilon = 1e-12);
        let cam = PerspCamera::new(65, 65, 60.0, 0.3, PI / 4.0).unwrap();
        let s = cart_to_sph(cam.ray(32.0, 32.0)).unwrap();
        assert_abs_diff_eq!(s.phi, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(s.theta, PI / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn project_inverts_ray() {
        let cam = PerspCamera::new(80, 60, 100.0, -1.1, 0.4).unwrap();
        for (i, j) in [(0.0, 0.0), (12.3, 40.2), (79.0, 59.0)] {
            let p = cam.ray(i, j) * 3.7;
            let (pi, pj) = cam.project(p).unwrap();
            assert_abs_diff_eq!(pi, i, epsilon = 1e-9);
            assert_abs_diff_eq!(pj, j, epsilon = 1e-9);
        }
        assert!(cam.project(-cam.ray(10.0, 10.0)).is_none());
    }

    #[test]
    fn constant_erp_gives_constant_crop() {
        let grid = ErpGrid::new(64, 32).unwrap();
        let img = ErpImage::filled(grid, [0.25, 0.5, 0.75]);
        let crop = perspective_crop(&img, PerspCamera::new(20, 16, 70.0, 1.0, -0.5).unwrap());
        for p in &crop.pixels {
            for k in 0..3 {
                assert_abs_diff_eq!(p[k], [0.25, 0.5, 0.75][k], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn zero_meridian_edge_is_a_straight_column() {
        // Left half (phi < 0) black, right half white: the great circle
        // phi = 0 projects onto the centre column for any pitch.
        let grid = ErpGrid::new(512, 256).unwrap();
        let img = ErpImage::from_fn(grid, |c, _| if c < 256 { [0.0; 3] } else { [1.0; 3] });
        for pitch in [0.0, 0.4, -0.7] {
            let cam = PerspCamera::new(41, 41, 90.0, 0.0, pitch).unwrap();
            let crop = perspective_crop(&img, cam);
            for j in 0..41 {
                let row = &crop.pixels[j * 41..(j + 1) * 41];
                assert_abs_diff_eq!(row[20][0], 0.5, epsilon = 1e-4);
                assert!(row[..20].iter().all(|p| p[0] < 1e-6), "pitch {pitch}, row {j}");
                assert!(row[21..].iter().all(|p| p[0] > 1.0 - 1e-6), "pitch {pitch}, row {j}");
            }
        }
    }
}
