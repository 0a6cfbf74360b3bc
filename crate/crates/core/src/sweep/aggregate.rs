//! Edge-aware smoothing of cost slices with a guided filter.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::ErpGrid;

use super::cost::CostVolume;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AggregationParams {
    pub enabled: bool,
    /// Box radius in pixels.
    pub radius: usize,
    /// Regulariser on the guide variance.
    pub eps: f64,
}

impl Default for AggregationParams {
    fn default() -> Self {
        Self { enabled: true, radius: 4, eps: 1e-2 }
    }
}

/// Mean over a `(2r+1)^2` window; columns wrap, rows shrink at the edges.
pub fn box_mean(src: &[f64], grid: ErpGrid, r: usize) -> Vec<f64> {
    let ErpGrid { width, height } = grid;
    let mut horiz = vec![0.0; src.len()];
    let span = (2 * r + 1).min(width);
    let ri = r as isize;
    for row in 0..height {
        let line = &src[row * width..(row + 1) * width];
        let out = &mut horiz[row * width..(row + 1) * width];
        if span == width {
            let s: f64 = line.iter().sum();
            out.iter_mut().for_each(|o| *o = s);
            continue;
        }
        let at = |c: isize| line[c.rem_euclid(width as isize) as usize];
        let mut s: f64 = (-ri..=ri).map(at).sum();
        for (c, o) in out.iter_mut().enumerate() {
            *o = s;
            let c = c as isize;
            s += at(c + ri + 1) - at(c - ri);
        }
    }
    let mut out = vec![0.0; src.len()];
    for col in 0..width {
        let mut s = 0.0;
        let mut lo = 0usize;
        let mut hi = 0usize; // exclusive
        for row in 0..height {
            let want_hi = (row + r + 1).min(height);
            let want_lo = row.saturating_sub(r);
            while hi < want_hi {
                s += horiz[hi * width + col];
                hi += 1;
            }
            while lo < want_lo {
                s -= horiz[lo * width + col];
                lo += 1;
            }
            out[row * width + col] = s / ((hi - lo) * span) as f64;
        }
    }
    out
}

/// Guided filter of one slice `p` with guide `guide`.
pub fn guided_filter(p: &[f64], guide: &[f64], grid: ErpGrid, radius: usize, eps: f64) -> Vec<f64> {
    let mean_i = box_mean(guide, grid, radius);
    let ii: Vec<f64> = guide.iter().map(|x| x * x).collect();
    let var_i: Vec<f64> =
        box_mean(&ii, grid, radius).iter().zip(&mean_i).map(|(m2, m)| (m2 - m * m).max(0.0)).collect();
    filter_with_stats(p, guide, &mean_i, &var_i, grid, radius, eps)
}

fn filter_with_stats(
    p: &[f64],
    guide: &[f64],
    mean_i: &[f64],
    var_i: &[f64],
    grid: ErpGrid,
    radius: usize,
    eps: f64,
) -> Vec<f64> {
    let mean_p = box_mean(p, grid, radius);
    let ip: Vec<f64> = guide.iter().zip(p).map(|(i, p)| i * p).collect();
    let corr = box_mean(&ip, grid, radius);
    let n = p.len();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for k in 0..n {
        let cov = corr[k] - mean_i[k] * mean_p[k];
        a[k] = cov / (var_i[k] + eps);
        b[k] = mean_p[k] - a[k] * mean_i[k];
    }
    let ma = box_mean(&a, grid, radius);
    let mb = box_mean(&b, grid, radius);
    (0..n).map(|k| ma[k] * guide[k] + mb[k]).collect()
}

/// Filters every plane of the volume with the target luma as guide.
///
/// Infinite cells are replaced by the largest finite cost of their pixel for
/// filtering and stay infinite afterwards.
pub fn aggregate(volume: &mut CostVolume, guide: &[f32], params: AggregationParams) -> Result<()> {
    if !params.enabled {
        return Ok(());
    }
    let grid = volume.grid;
    let n = grid.len();
    if guide.len() != n {
        return Err(Error::config("guide does not match the cost volume"));
    }
    if !(params.eps > 0.0 && params.eps.is_finite()) {
        return Err(Error::config(format!("aggregation eps must be positive, got {}", params.eps)));
    }
    let planes = volume.planes;
    let mut fill = vec![f32::NEG_INFINITY; n];
    for j in 0..planes {
        for (f, c) in fill.iter_mut().zip(volume.plane(j)) {
            if c.is_finite() && *c > *f {
                *f = *c;
            }
        }
    }
    let global = fill.iter().copied().filter(|f| f.is_finite()).fold(0.0f32, f32::max);
    for f in fill.iter_mut() {
        if !f.is_finite() {
            *f = global;
        }
    }
    let g: Vec<f64> = guide.iter().map(|&x| x as f64).collect();
    let mean_i = box_mean(&g, grid, params.radius);
    let gg: Vec<f64> = g.iter().map(|x| x * x).collect();
    let var_i: Vec<f64> =
        box_mean(&gg, grid, params.radius).iter().zip(&mean_i).map(|(m2, m)| (m2 - m * m).max(0.0)).collect();
    volume.cost.par_chunks_mut(n).for_each(|slice| {
        let p: Vec<f64> =
            slice.iter().zip(&fill).map(|(c, f)| if c.is_finite() { *c as f64 } else { *f as f64 }).collect();
        let q = filter_with_stats(&p, &g, &mean_i, &var_i, grid, params.radius, params.eps);
        for (c, v) in slice.iter_mut().zip(q) {
            if c.is_finite() {
                *c = v as f32;
            }
        }
    });
    Ok(())
}
