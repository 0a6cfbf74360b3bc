//! Reverse Huber (berHu) loss and the two-stage loss combination. Losses are
//! reported only; nothing is trained.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::DepthMap;

/// Fraction of the largest absolute error used as the berHu threshold.
pub const BERHU_FRACTION: f64 = 0.2;

/// berHu of a single residual: `|e|` up to `c`, `(e^2 + c^2) / 2c` beyond.
pub fn berhu_value(e: f64, c: f64) -> f64 {
    let a = e.abs();
    if a <= c {
        a
    } else {
        (e * e + c * c) / (2.0 * c)
    }
}

/// Mean berHu over masked pixels with `c = 0.2 * max|e|`. A perfect
/// prediction (`c = 0`) has zero loss.
pub fn berhu(pred: &[f64], gt: &[f64], mask: &[bool]) -> Result<f64> {
    if pred.len() != gt.len() || mask.len() != gt.len() {
        return Err(Error::config("berHu inputs differ in length"));
    }
    let residuals: Vec<f64> = (0..gt.len()).filter(|&i| mask[i]).map(|i| pred[i] - gt[i]).collect();
    if residuals.is_empty() {
        return Err(Error::numerical("berHu mask is empty"));
    }
    if residuals.iter().any(|e| !e.is_finite()) {
        return Err(Error::numerical("non-finite residual in berHu"));
    }
    let c = BERHU_FRACTION * residuals.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    if c == 0.0 {
        return Ok(0.0);
    }
    Ok(residuals.iter().map(|&e| berhu_value(e, c)).sum::<f64>() / residuals.len() as f64)
}

/// berHu between two depth maps over their common valid pixels.
pub fn berhu_depth(pred: &DepthMap, gt: &DepthMap) -> Result<f64> {
    if pred.grid() != gt.grid() {
        return Err(Error::config("prediction and ground truth sizes differ"));
    }
    let mask: Vec<bool> = pred.mask().iter().zip(gt.mask()).map(|(a, b)| *a && *b).collect();
    berhu(pred.depths(), gt.depths(), &mask)
}

/// Weights of the coarse and stereo terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub omega1: f64,
    pub omega2: f64,
    /// Per-level stereo weights; missing entries count as 1.
    pub lambda: Vec<f64>,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { omega1: 1.0, omega2: 0.02, lambda: Vec::new() }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x >= 0.0 && x.is_finite();
        if !ok(self.omega1) || !ok(self.omega2) || !self.lambda.iter().all(|&l| ok(l)) {
            return Err(Error::config("loss weights must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn level_weight(&self, level: usize) -> f64 {
        self.lambda.get(level).copied().unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub coarse: f64,
    pub stereo: Vec<f64>,
    pub total: f64,
}

/// `omega1 * coarse + omega2 * sum_l lambda_l * stereo_l`.
pub fn combine_losses(coarse: f64, stereo: &[f64], weights: &LossWeights) -> Result<f64> {
    weights.validate()?;
    let s: f64 = stereo.iter().enumerate().map(|(l, x)| weights.level_weight(l) * x).sum();
    Ok(weights.omega1 * coarse + weights.omega2 * s)
}

/// Loss of a coarse prediction and every stereo level against ground truth.
pub fn total_loss(
    coarse: (&DepthMap, &DepthMap),
    stereo: &[(&DepthMap, &DepthMap)],
    weights: &LossWeights,
) -> Result<LossReport> {
    let c = berhu_depth(coarse.0, coarse.1)?;
    let s = stereo.iter().map(|(p, g)| berhu_depth(p, g)).collect::<Result<Vec<_>>>()?;
    let total = combine_losses(c, &s, weights)?;
    Ok(LossReport { coarse: c, stereo: s, total })
}
