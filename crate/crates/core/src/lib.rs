//! Spherical plane-sweep stereo and depth-image-based view synthesis for
//! equirectangular (360°) panoramas.
//!
//! The crate is organised as the pipeline runs:
//!
//! * [`geom`]: spherical / Cartesian / pixel conversions and the linearised
//!   disparity models for vertical and horizontal camera translations.
//! * [`scene`] and [`persp`]: analytic RGB-D ground truth and perspective crops.
//! * [`dibr`]: forward splatting with a soft z-buffer.
//! * [`sweep`]: inverse-depth hypotheses, spherical warping, variance cost
//!   fusion, aggregation, soft regression and cascade refinement.
//! * [`pipeline`]: the two-stage run, metrics, losses and ablation studies.
//! * [`io`]: PFM depth, PNG images, JSON configs and reports.

pub mod dibr;
pub mod error;
pub mod geom;
pub mod image;
pub mod io;
pub mod persp;
pub mod pipeline;
pub mod scene;
pub mod sweep;

pub use error::{Error, ErrorKind, Result};
pub use geom::{Axis, Baseline, ErpGrid, PixelCoord, SphCoord, Vec3};
pub use image::{DepthMap, ErpImage, Rgb};
pub use scene::SceneSpec;
