//! Two-stage run: render, coarse depth, view synthesis, sweep, evaluation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dibr::{synthesize_views, SplatParams, SynthView};
use crate::error::{Error, Result};
use crate::geom::{Baseline, ErpGrid, Vec3};
use crate::image::{DepthMap, ErpImage};
use crate::scene::{builtin_scene, raycast_erp, SceneSpec};
use crate::sweep::{run_sweep, Sampling, SweepConfig, SweepOutput, SweepView};

use super::coarse::CoarseProvider;
use super::loss::{total_loss, LossReport, LossWeights};
use super::metrics::{eval_metrics, Metrics};

/// Where a scene comes from: a built-in name, a JSON file, or an inline
/// description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SceneSource {
    Builtin(String),
    File { file: PathBuf },
    Inline(SceneSpec),
}

impl Default for SceneSource {
    fn default() -> Self {
        SceneSource::Builtin("room".into())
    }
}

impl SceneSource {
    pub fn name(&self) -> String {
        match self {
            SceneSource::Builtin(n) => n.clone(),
            SceneSource::File { file } => {
                file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
            }
            SceneSource::Inline(_) => "inline".into(),
        }
    }

    pub fn load(&self) -> Result<SceneSpec> {
        match self {
            SceneSource::Builtin(n) => builtin_scene(n),
            SceneSource::File { file } => {
                let text = std::fs::read_to_string(file)?;
                let spec: SceneSpec = serde_json::from_str(&text)?;
                spec.validate()?;
                Ok(spec)
            }
            SceneSource::Inline(s) => {
                s.validate()?;
                Ok(s.clone())
            }
        }
    }

    /// Makes a relative scene path relative to `dir` instead.
    pub fn rebase(&mut self, dir: &Path) {
        if let SceneSource::File { file } = self {
            if file.is_relative() {
                *file = dir.join(&*file);
            }
        }
    }
}

/// Which artefacts a run writes next to its report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub report_json: String,
    pub report_csv: String,
    pub final_depth: Option<String>,
    pub coarse_depth: Option<String>,
    /// Write each synthesized view as `view_<k>.png`.
    pub views: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            report_json: "report.json".into(),
            report_csv: "report.csv".into(),
            final_depth: Some("depth.pfm".into()),
            coarse_depth: Some("coarse.pfm".into()),
            views: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub scene: SceneSource,
    /// Camera centre; defaults to the scene's first camera.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub camera: Option<Vec3>,
    pub width: usize,
    pub height: usize,
    pub coarse: CoarseProvider,
    /// Baselines from the input camera to each synthesized view.
    pub baselines: Vec<Baseline>,
    pub sweep: SweepConfig,
    pub splat: SplatParams,
    pub loss: LossWeights,
    /// Master seed; every random component mixes it into its own seed.
    pub seed: u64,
    pub outputs: Outputs,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            scene: SceneSource::default(),
            camera: None,
            width: 512,
            height: 256,
            coarse: CoarseProvider::GroundTruth,
            baselines: vec![Baseline::vertical(-0.24), Baseline::vertical(0.24), Baseline::vertical(0.4)],
            sweep: SweepConfig::default(),
            splat: SplatParams::default(),
            loss: LossWeights::default(),
            seed: 0,
            outputs: Outputs::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        ErpGrid::new(self.width, self.height)?;
        if self.baselines.is_empty() {
            return Err(Error::config("at least one baseline is required"));
        }
        if self.baselines.iter().any(|b| !b.offset.is_finite()) {
            return Err(Error::config("baselines must be finite"));
        }
        self.coarse.validate()?;
        self.sweep.validate()?;
        self.splat.validate()?;
        self.loss.validate()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<ErpGrid> {
        ErpGrid::new(self.width, self.height)
    }

    /// Sweep settings with the master seed folded into random sampling.
    pub fn seeded_sweep(&self) -> SweepConfig {
        let mut s = self.sweep.clone();
        if let Sampling::Perturbed { sigma, seed } = s.sampling {
            s.sampling = Sampling::Perturbed { sigma, seed: seed ^ self.seed };
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSummary {
    pub baseline: Baseline,
    /// Fraction of pixels left empty by forward splatting.
    pub hole_fraction: f64,
}

/// Everything a run reports. Contains no timings, so identical inputs give
/// identical reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scene: String,
    pub config: PipelineConfig,
    pub coarse: Metrics,
    pub levels: Vec<Metrics>,
    #[serde(rename = "final")]
    pub final_metrics: Metrics,
    pub loss: LossReport,
    pub views: Vec<ViewSummary>,
    pub flagged_cells: Vec<usize>,
}

impl Report {
    /// One row per stage: coarse, each sweep level, final.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scene,stage,");
        out.push_str(&Metrics::COLUMNS.join(","));
        out.push_str(",pixels\n");
        let mut row = |stage: &str, m: &Metrics| {
            out.push_str(&format!("{},{}", self.scene, stage));
            for v in m.values() {
                out.push_str(&format!(",{v}"));
            }
            out.push_str(&format!(",{}\n", m.pixels));
        };
        row("coarse", &self.coarse);
        for (i, m) in self.levels.iter().enumerate() {
            row(&format!("level_{}", i + 1), m);
        }
        row("final", &self.final_metrics);
        out
    }
}

/// Intermediate products of a run.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub image: ErpImage,
    pub gt: DepthMap,
    pub coarse: DepthMap,
    pub views: Vec<SynthView>,
    pub sweep: SweepOutput,
    pub report: Report,
}

impl PipelineRun {
    pub fn final_depth(&self) -> &DepthMap {
        self.sweep.depth()
    }
}

/// Runs both stages on `scene` seen from `cam`.
pub fn two_stage_run(scene: &SceneSpec, cam: Vec3, config: &PipelineConfig) -> Result<PipelineRun> {
    config.validate()?;
    let grid = config.grid()?;
    let (image, gt) = raycast_erp(scene, cam, grid)?;
    if gt.valid_count() == 0 {
        return Err(Error::numerical("the camera sees no surface"));
    }
    let coarse = config.coarse.coarse_depth(&gt, config.seed)?;
    let views = synthesize_views(&image, &coarse, &config.baselines, config.splat)?;
    let refs: Vec<SweepView<'_>> =
        views.iter().map(|v| SweepView { image: &v.image, baseline: v.baseline, mask: Some(&v.mask) }).collect();
    let sweep = run_sweep(&image, &refs, &config.seeded_sweep())?;

    let coarse_metrics = eval_metrics(&coarse, &gt)?;
    let levels = sweep.levels.iter().map(|d| eval_metrics(d, &gt)).collect::<Result<Vec<_>>>()?;
    let final_metrics = *levels.last().expect("at least one level");
    let pairs: Vec<(&DepthMap, &DepthMap)> = sweep.levels.iter().map(|d| (d, &gt)).collect();
    let loss = total_loss((&coarse, &gt), &pairs, &config.loss)?;
    let summaries = views
        .iter()
        .map(|v| ViewSummary {
            baseline: v.baseline,
            hole_fraction: v.mask.iter().filter(|m| !**m).count() as f64 / grid.len() as f64,
        })
        .collect();
    let report = Report {
        scene: config.scene.name(),
        config: config.clone(),
        coarse: coarse_metrics,
        levels,
        final_metrics,
        loss,
        views: summaries,
        flagged_cells: sweep.flagged.clone(),
    };
    Ok(PipelineRun { image, gt, coarse, views, sweep, report })
}

/// Loads the configured scene and runs both stages.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineRun> {
    let scene = config.scene.load()?;
    let cam = config.camera.unwrap_or_else(|| scene.default_camera());
    two_stage_run(&scene, cam, config)
}
