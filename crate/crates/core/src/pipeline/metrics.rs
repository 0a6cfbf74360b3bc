//! Standard depth-error metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::DepthMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub abs_rel: f64,
    pub sq_rel: f64,
    pub rmse: f64,
    pub rmse_log: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    /// Pixels evaluated (valid in both maps).
    pub pixels: usize,
}

impl Metrics {
    /// Column names in table order.
    pub const COLUMNS: [&'static str; 7] = ["abs_rel", "sq_rel", "rmse", "rmse_log", "delta1", "delta2", "delta3"];

    pub fn values(&self) -> [f64; 7] {
        [self.abs_rel, self.sq_rel, self.rmse, self.rmse_log, self.delta1, self.delta2, self.delta3]
    }

    /// Unweighted mean of several metric sets.
    pub fn mean(all: &[Metrics]) -> Option<Metrics> {
        if all.is_empty() {
            return None;
        }
        let n = all.len() as f64;
        let avg = |f: fn(&Metrics) -> f64| all.iter().map(f).sum::<f64>() / n;
        Some(Metrics {
            abs_rel: avg(|m| m.abs_rel),
            sq_rel: avg(|m| m.sq_rel),
            rmse: avg(|m| m.rmse),
            rmse_log: avg(|m| m.rmse_log),
            delta1: avg(|m| m.delta1),
            delta2: avg(|m| m.delta2),
            delta3: avg(|m| m.delta3),
            pixels: all.iter().map(|m| m.pixels).sum(),
        })
    }
}

/// Metrics over pixels valid in both `pred` and `gt`.
pub fn eval_metrics(pred: &DepthMap, gt: &DepthMap) -> Result<Metrics> {
    if pred.grid() != gt.grid() {
        return Err(Error::config("prediction and ground truth sizes differ"));
    }
    let mut n = 0usize;
    let (mut abs_rel, mut sq_rel, mut sq, mut sq_log) = (0.0, 0.0, 0.0, 0.0);
    let mut within = [0usize; 3];
    let thresholds = [1.25, 1.25f64.powi(2), 1.25f64.powi(3)];
    for i in 0..gt.grid().len() {
        if !(pred.mask()[i] && gt.mask()[i]) {
            continue;
        }
        let (p, g) = (pred.depths()[i], gt.depths()[i]);
        let e = p - g;
        n += 1;
        abs_rel += e.abs() / g;
        sq_rel += e * e / g;
        sq += e * e;
        let l = p.ln() - g.ln();
        sq_log += l * l;
        let ratio = (p / g).max(g / p);
        for (w, t) in within.iter_mut().zip(thresholds) {
            if ratio < t {
                *w += 1;
            }
        }
    }
    if n == 0 {
        return Err(Error::numerical("no pixel is valid in both prediction and ground truth"));
    }
    let nf = n as f64;
    Ok(Metrics {
        abs_rel: abs_rel / nf,
        sq_rel: sq_rel / nf,
        rmse: (sq / nf).sqrt(),
        rmse_log: (sq_log / nf).sqrt(),
        delta1: within[0] as f64 / nf,
        delta2: within[1] as f64 / nf,
        delta3: within[2] as f64 / nf,
        pixels: n,
    })
}
