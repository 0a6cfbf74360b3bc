//! Variance-fused matching cost over hypothesis planes.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{Baseline, ErpGrid};

use super::features::FeatureMap;
use super::hypothesis::HypothesisSet;
use super::warp::{sample_location, VerticalWarp};

/// A reference view prepared for sweeping.
#[derive(Debug, Clone, Copy)]
pub struct RefView<'a> {
    pub features: &'a FeatureMap,
    pub baseline: Baseline,
    /// Pixels of the reference that may be sampled; `None` means all.
    pub valid: Option<&'a [bool]>,
}

/// Plane-major cost raster: cell `(j, p)` is `cost[j * N + p]`.
///
/// A cell seen by fewer than two views (target included) has infinite cost.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVolume {
    pub grid: ErpGrid,
    pub planes: usize,
    pub cost: Vec<f32>,
    /// Views (target included) that contributed to each cell.
    pub count: Vec<u8>,
}

impl CostVolume {
    pub fn plane(&self, j: usize) -> &[f32] {
        let n = self.grid.len();
        &self.cost[j * n..(j + 1) * n]
    }

    #[inline]
    pub fn at(&self, j: usize, p: usize) -> f32 {
        self.cost[j * self.grid.len() + p]
    }

    /// Cells with too few contributing views.
    pub fn flagged(&self) -> usize {
        self.count.iter().filter(|&&c| c < 2).count()
    }
}

/// Builds the cost volume. The cost of a cell is the channel-summed variance
/// of the descriptors across contributing views, scaled by 4 so that for two
/// views it equals their squared Euclidean distance (the Hamming distance
/// for census bits).
pub fn build_cost_volume(
    target: &FeatureMap,
    refs: &[RefView<'_>],
    hyp: &HypothesisSet,
    model: VerticalWarp,
) -> Result<CostVolume> {
    let grid = target.grid();
    if refs.is_empty() {
        return Err(Error::config("the sweep needs at least one reference view"));
    }
    if refs.len() > 250 {
        return Err(Error::config("too many reference views"));
    }
    for r in refs {
        if r.features.grid() != grid || r.features.descriptor() != target.descriptor() {
            return Err(Error::config("reference features do not match the target"));
        }
        if r.valid.is_some_and(|m| m.len() != grid.len()) {
            return Err(Error::config("reference mask does not match the target"));
        }
    }
    let n = grid.len();
    let ch = target.channels();
    let planes = hyp.planes();
    let mut cost = vec![0.0f32; planes * n];
    let mut count = vec![0u8; planes * n];
    cost.par_chunks_mut(n).zip(count.par_chunks_mut(n)).enumerate().for_each(|(j, (cj, nj))| {
        let mut sum = vec![0.0f32; ch];
        let mut sq = vec![0.0f32; ch];
        let mut buf = vec![0.0f32; ch];
        for p in 0..n {
            let t = target.pixel(p);
            sum.copy_from_slice(t);
            for (s, x) in sq.iter_mut().zip(t) {
                *s = x * x;
            }
            let mut views = 1u32;
            for r in refs {
                let Some(loc) = sample_location(grid, hyp, r.baseline, model, p, j) else { continue };
                if !r.features.sample(loc.u, loc.v, r.valid, &mut buf) {
                    continue;
                }
                views += 1;
                for c in 0..ch {
                    sum[c] += buf[c];
                    sq[c] += buf[c] * buf[c];
                }
            }
            nj[p] = views as u8;
            cj[p] = if views < 2 {
                f32::INFINITY
            } else {
                let inv = 1.0 / views as f32;
                let var: f32 = sum.iter().zip(&sq).map(|(s, q)| (q * inv - (s * inv) * (s * inv)).max(0.0)).sum();
                4.0 * var
            };
        }
    });
    Ok(CostVolume { grid, planes, cost, count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;
    use crate::image::ErpImage;
    use crate::scene::{builtin_scene, raycast_erp};
    use crate::sweep::features::{extract_features, Descriptor};
    use crate::sweep::hypothesis::sample_hypotheses;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_view_cost_is_squared_distance() {
        let grid = ErpGrid::new(16, 8).unwrap();
        let a = ErpImage::filled(grid, [0.2, 0.4, 0.6]);
        let b = ErpImage::filled(grid, [0.5, 0.4, 0.2]);
        let fa = extract_features(&a, Descriptor::Rgb);
        let fb = extract_features(&b, Descriptor::Rgb);
        let h = sample_hypotheses(1.0, 2.0, 3, 1.0).unwrap();
        let refs = [RefView { features: &fb, baseline: Baseline::vertical(0.0), valid: None }];
        let cv = build_cost_volume(&fa, &refs, &h, VerticalWarp::Linear).unwrap();
        for c in &cv.cost {
            assert_abs_diff_eq!(*c, 0.09 + 0.16, epsilon = 1e-5);
        }
        assert_eq!(cv.flagged(), 0);
    }

    #[test]
    fn cells_without_a_reference_are_infinite() {
        let grid = ErpGrid::new(16, 8).unwrap();
        let a = ErpImage::filled(grid, [0.2; 3]);
        let fa = extract_features(&a, Descriptor::Rgb);
        let h = sample_hypotheses(0.5, 2.0, 3, 1.0).unwrap();
        let mask = vec![false; grid.len()];
        let refs = [RefView { features: &fa, baseline: Baseline::vertical(0.0), valid: Some(&mask) }];
        let cv = build_cost_volume(&fa, &refs, &h, VerticalWarp::Linear).unwrap();
        assert!(cv.cost.iter().all(|c| c.is_infinite()));
        assert_eq!(cv.flagged(), cv.cost.len());
    }

    #[test]
    fn true_plane_has_lowest_cost_on_a_concentric_sphere() {
        // Radius-2 sphere around the target; the shifted view is
        // rendered from the shifted camera.
        let grid = ErpGrid::new(128, 64).unwrap();
        let mut scene = builtin_scene("lounge").unwrap();
        scene.primitives = vec![crate::scene::Primitive {
            shape: crate::scene::Shape::Sphere { center: Vec3::ZERO, radius: 2.0 },
            texture: crate::scene::Texture::ValueNoise { seed: 3, scale: 1.5 },
        }];
        let (t, _) = raycast_erp(&scene, Vec3::ZERO, grid).unwrap();
        let b = Baseline::horizontal(0.2);
        let (r, _) = raycast_erp(&scene, b.translation(), grid).unwrap();
        let h = sample_hypotheses(0.5, 8.0, 16, 1.0).unwrap();
        let ft = extract_features(&t, Descriptor::Rgb);
        let fr = extract_features(&r, Descriptor::Rgb);
        let cv =
            build_cost_volume(&ft, &[RefView { features: &fr, baseline: b, valid: None }], &h, VerticalWarp::Linear)
                .unwrap();
        // 1/2 = 0.125 + 1.875 j / 15 gives j = 3.
        let mut wins = 0;
        let mut total = 0;
        for row in 16..48 {
            for col in 0..128 {
                let p = row * 128 + col;
                let best = (0..16).min_by(|&a, &b| cv.at(a, p).total_cmp(&cv.at(b, p))).unwrap();
                total += 1;
                wins += usize::from(best == 3);
            }
        }
        assert!(wins as f64 > 0.6 * total as f64, "{wins}/{total}");
    }
}
