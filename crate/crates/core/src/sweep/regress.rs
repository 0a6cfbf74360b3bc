//! Soft-argmin depth regression over hypothesis planes.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::DepthMap;

use super::cost::CostVolume;
use super::hypothesis::HypothesisSet;

/// Softmax of `-cost / tau` over the finite entries; infinite costs get
/// zero weight. `None` when no entry is finite.
pub fn softmax_weights(costs: &[f32], tau: f64) -> Option<Vec<f64>> {
    let best = costs.iter().copied().filter(|c| c.is_finite()).fold(f32::INFINITY, f32::min);
    if !best.is_finite() {
        return None;
    }
    let mut w: Vec<f64> =
        costs.iter().map(|&c| if c.is_finite() { (-((c - best) as f64) / tau).exp() } else { 0.0 }).collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= z);
    Some(w)
}

/// Expected plane value under the softmax weights, converted to depth and
/// clamped to the hypothesis range. Pixels whose planes are all infinite
/// are invalid.
pub fn regress_depth(volume: &CostVolume, hyp: &HypothesisSet, tau: f64) -> Result<DepthMap> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::config(format!("softmax temperature must be positive, got {tau}")));
    }
    if volume.planes != hyp.planes() {
        return Err(Error::config("cost volume and hypotheses disagree on the plane count"));
    }
    let grid = volume.grid;
    let n = grid.len();
    let (lo, hi) = (1.0 / hyp.d_max(), 1.0 / hyp.d_min());
    let domain = hyp.domain();
    let out: Vec<(f64, bool)> = (0..n)
        .into_par_iter()
        .map_init(
            || vec![0.0f32; volume.planes],
            |costs, p| {
                for (j, c) in costs.iter_mut().enumerate() {
                    *c = volume.at(j, p);
                }
                match softmax_weights(costs, tau) {
                    Some(w) => {
                        let value: f64 = w.iter().enumerate().map(|(j, wj)| wj * hyp.value(p, j)).sum();
                        let inv = domain.to_inverse(value).clamp(lo, hi);
                        (1.0 / inv, true)
                    }
                    None => (hyp.d_max(), false),
                }
            },
        )
        .collect();
    let (depth, valid): (Vec<f64>, Vec<bool>) = out.into_iter().unzip();
    let valid_count = valid.iter().filter(|v| **v).count();
    if valid_count == 0 {
        return Err(Error::numerical("no pixel has a finite matching cost"));
    }
    DepthMap::with_mask(grid, depth, valid, hyp.d_min(), hyp.d_max())
}
