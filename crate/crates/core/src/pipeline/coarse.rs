//! Stand-ins for the first-stage monocular depth network.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::DepthMap;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum CoarseProvider {
    /// The rendered depth itself.
    #[default]
    GroundTruth,
    /// Ground truth times `exp(sigma_rel * n)`, `n` standard normal per pixel.
    NoisyGt {
        sigma_rel: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Ground truth snapped to `levels` values uniform in inverse depth.
    Quantized { levels: usize },
    /// One depth everywhere.
    ConstantPlane { depth: f64 },
}

impl CoarseProvider {
    pub fn label(&self) -> String {
        match self {
            CoarseProvider::GroundTruth => "ground_truth".into(),
            CoarseProvider::NoisyGt { sigma_rel, .. } => format!("noisy_gt({sigma_rel})"),
            CoarseProvider::Quantized { levels } => format!("quantized({levels})"),
            CoarseProvider::ConstantPlane { depth } => format!("constant_plane({depth})"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CoarseProvider::NoisyGt { sigma_rel, .. } if !(sigma_rel >= 0.0 && sigma_rel.is_finite()) => {
                Err(Error::config("noisy coarse depth needs a finite, non-negative sigma"))
            }
            CoarseProvider::Quantized { levels } if levels < 2 => {
                Err(Error::config("quantized coarse depth needs at least 2 levels"))
            }
            CoarseProvider::ConstantPlane { depth } if !(depth > 0.0 && depth.is_finite()) => {
                Err(Error::config("constant coarse depth must be positive"))
            }
            _ => Ok(()),
        }
    }

    /// Produces a coarse depth for `gt`. Values are clamped to the map's
    /// range; `stream` separates random draws of different runs.
    pub fn coarse_depth(&self, gt: &DepthMap, stream: u64) -> Result<DepthMap> {
        self.validate()?;
        let (lo, hi) = (gt.d_min(), gt.d_max());
        let grid = gt.grid();
        let mask = gt.mask().to_vec();
        let depth: Vec<f64> = match *self {
            CoarseProvider::GroundTruth => gt.depths().to_vec(),
            CoarseProvider::NoisyGt { sigma_rel, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ stream.rotate_left(32));
                gt.depths()
                    .iter()
                    .map(|&d| {
                        let n: f64 = StandardNormal.sample(&mut rng);
                        (d * (sigma_rel * n).exp()).clamp(lo, hi)
                    })
                    .collect()
            }
            CoarseProvider::Quantized { levels } => {
                let (a, b) = (1.0 / hi, 1.0 / lo);
                let step = (b - a) / (levels - 1) as f64;
                gt.depths()
                    .iter()
                    .map(|&d| {
                        let k = ((1.0 / d - a) / step).round().clamp(0.0, (levels - 1) as f64);
                        1.0 / (a + k * step)
                    })
                    .collect()
            }
            CoarseProvider::ConstantPlane { depth } => {
                if depth < lo || depth > hi {
                    return Err(Error::config(format!("constant depth {depth} outside [{lo}, {hi}]")));
                }
                return DepthMap::constant(grid, depth, lo, hi);
            }
        };
        let depth = depth.into_iter().zip(&mask).map(|(d, &m)| if m { d } else { 0.0 }).collect();
        DepthMap::with_mask(grid, depth, mask, lo, hi)
    }
}
