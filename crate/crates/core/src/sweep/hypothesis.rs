//! Depth hypotheses: global planes at the first level, per-pixel windows
//! around the previous prediction at later levels.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{check_range, DepthMap};

/// How hypothesis planes are spread over the depth range.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Sampling {
    /// Uniform in `1/d`.
    #[default]
    UniformInverseDepth,
    /// Uniform in `d`.
    UniformDepth,
    /// Uniform in `d`, each plane jittered by Gaussian noise with standard
    /// deviation `sigma` plane steps.
    Perturbed { sigma: f64, seed: u64 },
}

impl Sampling {
    pub fn domain(&self) -> Domain {
        match self {
            Sampling::UniformInverseDepth => Domain::InverseDepth,
            Sampling::UniformDepth | Sampling::Perturbed { .. } => Domain::Depth,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Sampling::UniformInverseDepth => "uniform_inverse_depth",
            Sampling::UniformDepth => "uniform_depth",
            Sampling::Perturbed { .. } => "random",
        }
    }

    /// Plane positions in units of the plane step, increasing, within `[0, D-1]`.
    fn offsets(&self, planes: usize, level: usize) -> Vec<f64> {
        let mut out: Vec<f64> = (0..planes).map(|j| j as f64).collect();
        if let Sampling::Perturbed { sigma, seed } = *self {
            if sigma > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(level as u64 * 0x9E37_79B9));
                let normal = Normal::new(0.0, sigma).expect("finite sigma");
                let top = (planes - 1) as f64;
                for x in out.iter_mut() {
                    let mut y = *x + normal.sample(&mut rng);
                    // Reflect at the ends so planes stay inside the window.
                    if y < 0.0 {
                        y = -y;
                    }
                    if y > top {
                        y = 2.0 * top - y;
                    }
                    *x = y.clamp(0.0, top);
                }
                out.sort_by(f64::total_cmp);
            }
        }
        out
    }
}

/// The space in which planes are evenly spaced and in which the soft
/// regression averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    InverseDepth,
    Depth,
}

impl Domain {
    pub fn to_inverse(self, value: f64) -> f64 {
        match self {
            Domain::InverseDepth => value,
            Domain::Depth => 1.0 / value,
        }
    }

    pub fn from_inverse(self, inv: f64) -> f64 {
        match self {
            Domain::InverseDepth => inv,
            Domain::Depth => 1.0 / inv,
        }
    }
}

/// Start and step of a pixel's plane list, in the sampling domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub start: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Windows {
    Global(Window),
    PerPixel(Vec<Window>),
}

/// The planes of one cascade level. Plane `j` of a pixel sits at
/// `start + step * offset[j]` in the sampling domain; inverse depth
/// increases with `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisSet {
    level: usize,
    planes: usize,
    /// Plane interval: the unitless scale `v` at level 1, the inverse-depth
    /// (or depth) interval `v_l` at later levels.
    interval: f64,
    d_min: f64,
    d_max: f64,
    domain: Domain,
    offsets: Vec<f64>,
    windows: Windows,
}

fn check_planes(planes: usize) -> Result<()> {
    if planes < 2 {
        return Err(Error::config(format!("need at least 2 hypothesis planes, got {planes}")));
    }
    Ok(())
}

/// First-level planes over the whole range:
/// `1/d_j = 1/d_max + (1/d_min - 1/d_max) * v * j / (D - 1)` for the default
/// sampling.
pub fn sample_hypotheses(d_min: f64, d_max: f64, planes: usize, v: f64) -> Result<HypothesisSet> {
    sample_hypotheses_with(d_min, d_max, planes, v, Sampling::UniformInverseDepth)
}

pub fn sample_hypotheses_with(
    d_min: f64,
    d_max: f64,
    planes: usize,
    v: f64,
    sampling: Sampling,
) -> Result<HypothesisSet> {
    check_range(d_min, d_max)?;
    check_planes(planes)?;
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::config(format!("plane interval scale must be in (0, 1], got {v}")));
    }
    if let Sampling::Perturbed { sigma, .. } = sampling {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::config("perturbation sigma must be finite and non-negative"));
        }
    }
    let domain = sampling.domain();
    let denom = (planes - 1) as f64;
    let window = match domain {
        Domain::InverseDepth => Window { start: 1.0 / d_max, step: (1.0 / d_min - 1.0 / d_max) * v / denom },
        Domain::Depth => Window { start: d_max, step: -(d_max - d_min) * v / denom },
    };
    Ok(HypothesisSet {
        level: 1,
        planes,
        interval: v,
        d_min,
        d_max,
        domain,
        offsets: sampling.offsets(planes, 1),
        windows: Windows::Global(window),
    })
}

/// Default later-level interval: the level window spans `2 / D_prev` of the
/// full first-level range.
pub fn default_interval(prev_planes: usize, planes: usize, d_min: f64, d_max: f64, domain: Domain) -> f64 {
    let full = match domain {
        Domain::InverseDepth => 1.0 / d_min - 1.0 / d_max,
        Domain::Depth => d_max - d_min,
    };
    2.0 * full / (prev_planes as f64 * planes as f64)
}

/// Per-pixel planes around the previous level's prediction.
///
/// In the sampling domain: `lo = max(x - D*v/2, x_min)`,
/// `hi = min(x_max, x + D*v/2)`, step `(hi - lo) / (D - 1)`. Pixels with no
/// valid previous depth fall back to the full range.
pub fn cascade_refine(
    prev: &DepthMap,
    level: usize,
    planes: usize,
    interval: f64,
    sampling: Sampling,
) -> Result<HypothesisSet> {
    check_planes(planes)?;
    if !(interval > 0.0 && interval.is_finite()) {
        return Err(Error::config(format!("plane interval must be positive, got {interval}")));
    }
    let (d_min, d_max) = (prev.d_min(), prev.d_max());
    let domain = sampling.domain();
    let half = planes as f64 * interval / 2.0;
    let denom = (planes - 1) as f64;
    let windows = prev
        .depths()
        .iter()
        .zip(prev.mask())
        .map(|(&d, &ok)| match domain {
            Domain::InverseDepth => {
                let (lo, hi) = if ok {
                    let x = 1.0 / d;
                    ((x - half).max(1.0 / d_max), (x + half).min(1.0 / d_min))
                } else {
                    (1.0 / d_max, 1.0 / d_min)
                };
                Window { start: lo, step: (hi - lo) / denom }
            }
            Domain::Depth => {
                let (near, far) = if ok { ((d - half).max(d_min), (d + half).min(d_max)) } else { (d_min, d_max) };
                Window { start: far, step: -(far - near) / denom }
            }
        })
        .collect();
    Ok(HypothesisSet {
        level,
        planes,
        interval,
        d_min,
        d_max,
        domain,
        offsets: sampling.offsets(planes, level),
        windows: Windows::PerPixel(windows),
    })
}

impl HypothesisSet {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn planes(&self) -> usize {
        self.planes
    }

    pub fn interval(&self) -> f64 {
        self.interval
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn is_per_pixel(&self) -> bool {
        matches!(self.windows, Windows::PerPixel(_))
    }

    pub fn window(&self, pixel: usize) -> Window {
        match &self.windows {
            Windows::Global(w) => *w,
            Windows::PerPixel(ws) => ws[pixel],
        }
    }

    /// Plane value in the sampling domain.
    #[inline]
    pub fn value(&self, pixel: usize, j: usize) -> f64 {
        let w = self.window(pixel);
        w.start + w.step * self.offsets[j]
    }

    #[inline]
    pub fn inv_depth(&self, pixel: usize, j: usize) -> f64 {
        self.domain.to_inverse(self.value(pixel, j))
    }

    #[inline]
    pub fn depth(&self, pixel: usize, j: usize) -> f64 {
        1.0 / self.inv_depth(pixel, j)
    }

    /// All inverse depths of one pixel, increasing.
    pub fn inv_depths(&self, pixel: usize) -> Vec<f64> {
        (0..self.planes).map(|j| self.inv_depth(pixel, j)).collect()
    }
}
