//! Multi-level spherical plane sweep.
//!
//! Each level extracts descriptors, warps every reference onto the target
//! for each hypothesis plane, fuses the views by variance, smooths the cost
//! slices and regresses depth. Later levels search a narrow window around
//! the previous prediction.

pub mod aggregate;
pub mod cost;
pub mod features;
pub mod hypothesis;
pub mod regress;
pub mod warp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Baseline, ErpGrid};
use crate::image::{check_range, DepthMap, ErpImage};

pub use aggregate::{aggregate, AggregationParams};
pub use cost::{build_cost_volume, CostVolume, RefView};
pub use features::{extract_features, Descriptor, FeatureMap};
pub use hypothesis::{
    cascade_refine, default_interval, sample_hypotheses, sample_hypotheses_with, Domain, HypothesisSet, Sampling,
};
pub use regress::{regress_depth, softmax_weights};
pub use warp::{displacement_field, swl_displacement, swl_field, warp_view, VerticalWarp};

/// One cascade level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelConfig {
    pub planes: usize,
    /// Level 1: the unitless span scale `v` (default 1). Later levels: the
    /// plane interval in the sampling domain (default: the window covers
    /// `2 / D_prev` of the full range).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<f64>,
}

impl LevelConfig {
    pub fn new(planes: usize) -> Self {
        Self { planes, interval: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub d_min: f64,
    pub d_max: f64,
    pub levels: Vec<LevelConfig>,
    /// Softmax temperature in cost units.
    pub temperature: f64,
    pub descriptor: Descriptor,
    pub sampling: Sampling,
    pub aggregation: AggregationParams,
    pub vertical_warp: VerticalWarp,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            d_min: 0.2,
            d_max: 8.0,
            levels: vec![LevelConfig::new(48), LevelConfig::new(24)],
            temperature: 0.2,
            descriptor: Descriptor::Census5x5,
            sampling: Sampling::UniformInverseDepth,
            aggregation: AggregationParams::default(),
            vertical_warp: VerticalWarp::Exact,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        check_range(self.d_min, self.d_max)?;
        if self.levels.is_empty() {
            return Err(Error::config("the sweep needs at least one level"));
        }
        for (i, l) in self.levels.iter().enumerate() {
            if l.planes < 2 {
                return Err(Error::config(format!("level {} needs at least 2 planes", i + 1)));
            }
            if let Some(v) = l.interval {
                let ok = if i == 0 { v > 0.0 && v <= 1.0 } else { v > 0.0 && v.is_finite() };
                if !ok {
                    return Err(Error::config(format!("level {} has an invalid plane interval {v}", i + 1)));
                }
            }
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::config(format!("temperature must be positive, got {}", self.temperature)));
        }
        if !(self.aggregation.eps > 0.0 && self.aggregation.eps.is_finite()) {
            return Err(Error::config("aggregation eps must be positive"));
        }
        Ok(())
    }
}

/// A reference image with the baseline from the target to it.
#[derive(Debug, Clone, Copy)]
pub struct SweepView<'a> {
    pub image: &'a ErpImage,
    pub baseline: Baseline,
    /// Pixels that hold real content (e.g. not disocclusion holes).
    pub mask: Option<&'a [bool]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    /// Prediction of every level, coarsest first.
    pub levels: Vec<DepthMap>,
    /// Cost cells seen by fewer than two views, per level.
    pub flagged: Vec<usize>,
}

impl SweepOutput {
    pub fn depth(&self) -> &DepthMap {
        self.levels.last().expect("at least one level")
    }
}

/// Shrinks a mask so that a pixel survives only if its whole
/// `(2r+1)^2` neighbourhood is set. Columns wrap, rows clamp.
pub fn erode_mask(mask: &[bool], grid: ErpGrid, r: usize) -> Vec<bool> {
    if r == 0 {
        return mask.to_vec();
    }
    let ErpGrid { width, height } = grid;
    let ri = r as isize;
    let mut horiz = vec![false; mask.len()];
    for row in 0..height {
        for col in 0..width {
            horiz[row * width + col] = (-ri..=ri).all(|dc| {
                let c = (col as isize + dc).rem_euclid(width as isize) as usize;
                mask[row * width + c]
            });
        }
    }
    let mut out = vec![false; mask.len()];
    for row in 0..height {
        for col in 0..width {
            out[row * width + col] = (-ri..=ri).all(|dr| {
                let rr = (row as isize + dr).clamp(0, height as isize - 1) as usize;
                horiz[rr * width + col]
            });
        }
    }
    out
}

/// Runs the cascade and returns every level's depth.
pub fn run_sweep(target: &ErpImage, refs: &[SweepView<'_>], config: &SweepConfig) -> Result<SweepOutput> {
    config.validate()?;
    if refs.is_empty() {
        return Err(Error::config("the sweep needs at least one reference view"));
    }
    let grid = target.grid();
    for r in refs {
        if r.image.grid() != grid {
            return Err(Error::config("reference and target sizes differ"));
        }
        if r.mask.is_some_and(|m| m.len() != grid.len()) {
            return Err(Error::config("reference mask does not match its image"));
        }
    }
    let descriptor = config.descriptor;
    let target_features = extract_features(target, descriptor);
    let ref_features: Vec<FeatureMap> = refs.iter().map(|r| extract_features(r.image, descriptor)).collect();
    let ref_masks: Vec<Option<Vec<bool>>> =
        refs.iter().map(|r| r.mask.map(|m| erode_mask(m, grid, descriptor.radius()))).collect();
    let views: Vec<RefView<'_>> = refs
        .iter()
        .zip(&ref_features)
        .zip(&ref_masks)
        .map(|((r, f), m)| RefView { features: f, baseline: r.baseline, valid: m.as_deref() })
        .collect();
    let guide = target.luma();

    let mut levels: Vec<DepthMap> = Vec::with_capacity(config.levels.len());
    let mut flagged = Vec::with_capacity(config.levels.len());
    for (i, level) in config.levels.iter().enumerate() {
        let hyp = match levels.last() {
            None => sample_hypotheses_with(
                config.d_min,
                config.d_max,
                level.planes,
                level.interval.unwrap_or(1.0),
                config.sampling,
            )?,
            Some(prev) => {
                let v = level.interval.unwrap_or_else(|| {
                    default_interval(
                        config.levels[i - 1].planes,
                        level.planes,
                        config.d_min,
                        config.d_max,
                        config.sampling.domain(),
                    )
                });
                cascade_refine(prev, i + 1, level.planes, v, config.sampling)?
            }
        };
        let mut volume = build_cost_volume(&target_features, &views, &hyp, config.vertical_warp)?;
        flagged.push(volume.flagged());
        aggregate(&mut volume, &guide, config.aggregation)?;
        let depth = regress_depth(&volume, &hyp, config.temperature)?;
        log::debug!(
            "level {}: {} planes, {} flagged cells, {} valid pixels",
            i + 1,
            level.planes,
            volume.flagged(),
            depth.valid_count()
        );
        levels.push(depth);
    }
    Ok(SweepOutput { levels, flagged })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_matches_the_two_level_setup() {
        let c = SweepConfig::default();
        assert_eq!(c.levels.iter().map(|l| l.planes).collect::<Vec<_>>(), vec![48, 24]);
        assert_eq!((c.d_min, c.d_max), (0.2, 8.0));
        c.validate().unwrap();
        let json = serde_json::to_string(&c).unwrap();
        let back: SweepConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn validation_catches_bad_levels() {
        let mut c = SweepConfig { levels: vec![], ..Default::default() };
        assert!(c.validate().is_err());
        c.levels = vec![LevelConfig { planes: 32, interval: Some(2.0) }];
        assert!(c.validate().is_err());
        c.levels = vec![LevelConfig::new(32), LevelConfig { planes: 8, interval: Some(2.0) }];
        c.validate().unwrap();
        c.temperature = 0.0;
        assert!(c.validate().is_err());
        assert!(serde_json::from_str::<SweepConfig>(r#"{"plane_count": 3}"#).is_err());
    }

    #[test]
    fn erosion_wraps_and_clamps() {
        let grid = ErpGrid::new(16, 8).unwrap();
        let mut m = vec![true; grid.len()];
        m[3 * 16] = false;
        let e = erode_mask(&m, grid, 2);
        assert!(!e[3 * 16 + 15] && !e[3 * 16 + 14] && e[3 * 16 + 13]);
        assert!(!e[16] && e[0]);
        assert_eq!(e.iter().filter(|x| !**x).count(), 25);
    }

    #[test]
    fn recovers_a_concentric_sphere() {
        use crate::geom::Vec3;
        use crate::scene::{raycast_erp, Primitive, SceneSpec, Shape, Texture};
        let scene = SceneSpec {
            primitives: vec![Primitive {
                shape: Shape::Sphere { center: Vec3::ZERO, radius: 2.5 },
                texture: Texture::ValueNoise { seed: 11, scale: 1.5 },
            }],
            background: [0.0; 3],
            depth_range: [0.2, 8.0],
            cameras: vec![],
        };
        let grid = ErpGrid::new(128, 64).unwrap();
        let (t, gt) = raycast_erp(&scene, Vec3::ZERO, grid).unwrap();
        let bs = [Baseline::vertical(-0.24), Baseline::vertical(0.24)];
        let imgs: Vec<ErpImage> = bs.iter().map(|b| raycast_erp(&scene, b.translation(), grid).unwrap().0).collect();
        let refs: Vec<SweepView<'_>> =
            imgs.iter().zip(bs).map(|(image, baseline)| SweepView { image, baseline, mask: None }).collect();
        let out = run_sweep(&t, &refs, &SweepConfig::default()).unwrap();
        assert_eq!(out.levels.len(), 2);
        let mut good = 0;
        let mut total = 0;
        for row in 8..56 {
            for col in 0..128 {
                let p = row * 128 + col;
                total += 1;
                let d = out.depth().depths()[p];
                if out.depth().mask()[p] && ((d - gt.depths()[p]) / gt.depths()[p]).abs() < 0.05 {
                    good += 1;
                }
            }
        }
        assert!(good as f64 > 0.9 * total as f64, "{good}/{total}");
    }
}
