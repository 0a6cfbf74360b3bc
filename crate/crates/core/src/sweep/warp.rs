//! Warping reference features onto target pixels for a hypothesis plane.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{exact_reproject, Axis, Baseline, ErpGrid, PixelCoord};

use super::features::FeatureMap;
use super::hypothesis::HypothesisSet;

/// Row displacement (pixels) that a vertical baseline `b` induces for a
/// point at inverse depth `inv_depth` and latitude `latitude`:
/// `cos(lat) * b * inv_depth * H / pi`.
#[inline]
pub fn swl_displacement(latitude: f64, b: f64, inv_depth: f64, height: usize) -> f64 {
    latitude.cos() * b * inv_depth * height as f64 / std::f64::consts::PI
}

/// How vertical baselines map hypothesis depths to reference positions.
/// Horizontal baselines always use exact reprojection.
/// The linear shift drops a `(b/d) cos(lat)` relative term, which is large
/// for close surfaces and wide baselines; `Exact` is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerticalWarp {
    /// Closed-form row shift, first order in `b / d`.
    Linear,
    /// Exact reprojection, like horizontal baselines.
    #[default]
    Exact,
}

/// Where target pixel `pixel` samples the reference for plane `j`.
#[inline]
pub(crate) fn sample_location(
    grid: ErpGrid,
    hyp: &HypothesisSet,
    baseline: Baseline,
    model: VerticalWarp,
    pixel: usize,
    j: usize,
) -> Option<PixelCoord> {
    let (col, row) = (pixel % grid.width, pixel / grid.width);
    let inv = hyp.inv_depth(pixel, j);
    match (baseline.axis, model) {
        (Axis::Vertical, VerticalWarp::Linear) => {
            let dy = swl_displacement(grid.row_latitude(row), baseline.offset, inv, grid.height);
            Some(PixelCoord::new(col as f64, row as f64 + dy))
        }
        _ => exact_reproject(PixelCoord::new(col as f64, row as f64), 1.0 / inv, baseline, grid).ok().map(|r| r.pixel),
    }
}

/// Displacement field of plane `j`: reference sample position minus target
/// pixel, per pixel. Only vertical baselines use the linear model.
pub fn swl_field(hyp: &HypothesisSet, j: usize, baseline: Baseline, grid: ErpGrid) -> Result<Vec<f64>> {
    if baseline.axis != Axis::Vertical {
        return Err(Error::config("the linear sweep displacement applies to vertical baselines only"));
    }
    if j >= hyp.planes() {
        return Err(Error::config(format!("plane {j} out of range ({} planes)", hyp.planes())));
    }
    Ok((0..grid.len())
        .map(|p| {
            let row = p / grid.width;
            swl_displacement(grid.row_latitude(row), baseline.offset, hyp.inv_depth(p, j), grid.height)
        })
        .collect())
}

/// Per-pixel sample offsets `(dx, dy)` into a reference for plane `j`.
/// Pixels that cannot be reprojected get NaN offsets.
pub fn displacement_field(
    hyp: &HypothesisSet,
    j: usize,
    baseline: Baseline,
    model: VerticalWarp,
    grid: ErpGrid,
) -> Result<Vec<PixelCoord>> {
    if j >= hyp.planes() {
        return Err(Error::config(format!("plane {j} out of range ({} planes)", hyp.planes())));
    }
    Ok((0..grid.len())
        .into_par_iter()
        .map(|p| {
            let (col, row) = ((p % grid.width) as f64, (p / grid.width) as f64);
            match sample_location(grid, hyp, baseline, model, p, j) {
                Some(loc) => PixelCoord::new(loc.u - col, loc.v - row),
                None => PixelCoord::new(f64::NAN, f64::NAN),
            }
        })
        .collect())
}

/// Gathers `out(u, v) = ref(u + dx, v + dy)` with bilinear interpolation.
/// Returns the warped features and per-pixel validity; rows that leave the
/// raster, non-finite offsets and invalid reference taps are invalid.
pub fn warp_view(
    reference: &FeatureMap,
    valid: Option<&[bool]>,
    offsets: &[PixelCoord],
) -> Result<(FeatureMap, Vec<bool>)> {
    let grid = reference.grid();
    if offsets.len() != grid.len() || valid.is_some_and(|m| m.len() != grid.len()) {
        return Err(Error::config("displacement raster does not match the feature map"));
    }
    let ch = reference.channels();
    let mut out = vec![0.0f32; grid.len() * ch];
    let mut ok = vec![false; grid.len()];
    out.par_chunks_mut(ch).zip(ok.par_iter_mut()).enumerate().for_each(|(p, (dst, flag))| {
        let d = offsets[p];
        let (u, v) = ((p % grid.width) as f64 + d.u, (p / grid.width) as f64 + d.v);
        *flag = d.u.is_finite() && d.v.is_finite() && reference.sample(u, v, valid, dst);
        if !*flag {
            dst.iter_mut().for_each(|x| *x = 0.0);
        }
    });
    Ok((FeatureMap::from_raw(grid, reference.descriptor(), out), ok))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::ErpImage;
    use crate::sweep::features::{extract_features, Descriptor};
    use crate::sweep::hypothesis::sample_hypotheses;
    use approx::assert_abs_diff_eq;

    #[test]
    fn equator_displacement_example() {
        let c = swl_displacement(0.0, 0.24, 1.0 / 2.4, 256);
        assert_abs_diff_eq!(c, 0.1 * 256.0 / std::f64::consts::PI, epsilon = 1e-12);
        assert_abs_diff_eq!(c, 8.148_733_086_305_041, epsilon = 1e-9);
    }

    #[test]
    fn displacement_vanishes_at_the_poles_and_flips_with_baseline() {
        assert_abs_diff_eq!(swl_displacement(std::f64::consts::FRAC_PI_2, 0.3, 2.0, 256), 0.0, epsilon = 1e-12);
        let a = swl_displacement(0.4, 0.3, 2.0, 256);
        assert_abs_diff_eq!(swl_displacement(0.4, -0.3, 2.0, 256), -a, epsilon = 1e-15);
    }

    #[test]
    fn field_rejects_horizontal_baselines() {
        let grid = ErpGrid::new(16, 8).unwrap();
        let h = sample_hypotheses(0.5, 4.0, 4, 1.0).unwrap();
        assert!(swl_field(&h, 0, Baseline::horizontal(0.1), grid).is_err());
        let f = swl_field(&h, 3, Baseline::vertical(0.1), grid).unwrap();
        assert_eq!(f.len(), grid.len());
        assert!(f[0] < f[3 * 16]);
    }

    #[test]
    fn vertical_warp_shifts_rows() {
        let grid = ErpGrid::new(64, 32).unwrap();
        let img = ErpImage::from_fn(grid, |c, r| [(r as f32) / 40.0, (c as f32) / 80.0, 0.5]);
        let feats = extract_features(&img, Descriptor::Rgb);
        let h = sample_hypotheses(1.0, 4.0, 2, 1.0).unwrap();
        let b = Baseline::vertical(0.2);
        let (warped, ok) =
            warp_view(&feats, None, &displacement_field(&h, 1, b, VerticalWarp::Linear, grid).unwrap()).unwrap();
        let warped = warped.data();
        let field = swl_field(&h, 1, b, grid).unwrap();
        for p in 0..grid.len() {
            let (col, row) = (p % 64, p / 64);
            let v = row as f64 + field[p];
            if (-0.5..=31.5).contains(&v) {
                assert!(ok[p]);
                assert_abs_diff_eq!(warped[p * 3], (v.clamp(0.0, 31.0) / 40.0) as f32, epsilon = 1e-5);
                assert_abs_diff_eq!(warped[p * 3 + 1], col as f32 / 80.0, epsilon = 1e-6);
            } else {
                assert!(!ok[p]);
            }
        }
    }

    #[test]
    fn zero_and_integer_shifts() {
        let grid = ErpGrid::new(16, 8).unwrap();
        let img = ErpImage::from_fn(grid, |c, r| [r as f32 / 8.0, c as f32 / 16.0, 0.0]);
        let feats = extract_features(&img, Descriptor::Rgb);
        let (same, ok) = warp_view(&feats, None, &vec![PixelCoord::new(0.0, 0.0); grid.len()]).unwrap();
        assert_eq!(same, feats);
        assert!(ok.iter().all(|o| *o));
        let (down, ok) = warp_view(&feats, None, &vec![PixelCoord::new(0.0, 1.0); grid.len()]).unwrap();
        // One full row past the last row centre leaves the sphere.
        for p in 0..grid.len() - 16 {
            assert!(ok[p]);
            assert_eq!(down.pixel(p), feats.pixel(p + 16));
        }
        assert!(ok[grid.len() - 16..].iter().all(|o| !*o));
    }

    #[test]
    fn horizontal_warp_uses_exact_geometry() {
        let grid = ErpGrid::new(64, 32).unwrap();
        let img = ErpImage::from_fn(grid, |c, r| [(r as f32) / 40.0, (c as f32) / 80.0, 0.5]);
        let feats = extract_features(&img, Descriptor::Rgb);
        let h = sample_hypotheses(1.0, 4.0, 2, 1.0).unwrap();
        let b = Baseline::horizontal(0.3);
        let (warped, ok) =
            warp_view(&feats, None, &displacement_field(&h, 0, b, VerticalWarp::Linear, grid).unwrap()).unwrap();
        let warped = warped.data();
        let p = 16 * 64 + 40;
        let r = exact_reproject(PixelCoord::new(40.0, 16.0), 4.0, b, grid).unwrap();
        assert!(ok[p]);
        assert_abs_diff_eq!(warped[p * 3] as f64, r.pixel.v / 40.0, epsilon = 1e-5);
    }
}
