//! Ablation matrices over the synthetic scene suite.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Axis, Baseline};
use crate::scene::SCENE_SUITE;
use crate::sweep::{LevelConfig, Sampling};

use super::metrics::Metrics;
use super::run::{run_pipeline, PipelineConfig, SceneSource};
use super::study::{baseline_fov_study, StudyConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationKind {
    Sampling,
    StereoDirection,
    CascadePlanes,
    NumViews,
    BaselineFov,
}

impl AblationKind {
    pub const ALL: [AblationKind; 5] = [
        AblationKind::Sampling,
        AblationKind::StereoDirection,
        AblationKind::CascadePlanes,
        AblationKind::NumViews,
        AblationKind::BaselineFov,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AblationKind::Sampling => "sampling",
            AblationKind::StereoDirection => "stereo-direction",
            AblationKind::CascadePlanes => "cascade-planes",
            AblationKind::NumViews => "num-views",
            AblationKind::BaselineFov => "baseline-fov",
        }
    }
}

impl fmt::Display for AblationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AblationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('_', "-");
        AblationKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::config(format!("unknown ablation '{s}'")))
    }
}

fn default_scenes() -> Vec<SceneSource> {
    SCENE_SUITE.iter().map(|s| SceneSource::Builtin(s.to_string())).collect()
}

/// Scenes plus the base settings every ablation cell starts from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub scenes: Vec<SceneSource>,
    pub pipeline: PipelineConfig,
    pub study: StudyConfig,
    /// Jitter of the random sampling variant, in plane steps.
    pub random_sigma: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            scenes: default_scenes(),
            pipeline: PipelineConfig::default(),
            study: StudyConfig::default(),
            random_sigma: 1.0,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scenes.is_empty() {
            return Err(Error::config("the scene suite is empty"));
        }
        if !(self.random_sigma > 0.0 && self.random_sigma.is_finite()) {
            return Err(Error::config("random_sigma must be positive"));
        }
        self.pipeline.validate()?;
        self.study.validate()
    }

    pub fn rebase(&mut self, dir: &Path) {
        self.pipeline.scene.rebase(dir);
        for s in &mut self.scenes {
            s.rebase(dir);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub scene: String,
    pub variant: String,
    pub values: Vec<f64>,
}

/// Result of one ablation: suite means plus the per-scene breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyTable {
    pub kind: AblationKind,
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
    pub per_scene: Vec<TableRow>,
}

impl StudyTable {
    pub fn row(&self, variant: &str) -> Option<&TableRow> {
        self.rows.iter().find(|r| r.variant == variant)
    }

    pub fn scene_row(&self, scene: &str, variant: &str) -> Option<&TableRow> {
        self.per_scene.iter().find(|r| r.scene == scene && r.variant == variant)
    }

    /// Suite means, one row per variant.
    pub fn to_csv(&self) -> String {
        let mut out = format!("variant,{}\n", self.columns.join(","));
        for r in &self.rows {
            out.push_str(&csv_line(&[&r.variant], &r.values));
        }
        out
    }

    pub fn per_scene_csv(&self) -> String {
        let mut out = format!("scene,variant,{}\n", self.columns.join(","));
        for r in &self.per_scene {
            out.push_str(&csv_line(&[&r.scene, &r.variant], &r.values));
        }
        out
    }
}

fn csv_line(keys: &[&str], values: &[f64]) -> String {
    let mut s = keys.join(",");
    for v in values {
        s.push_str(&format!(",{v}"));
    }
    s.push('\n');
    s
}

/// Short label such as `V+0.24` or `H-0.12`.
pub fn baseline_label(b: Baseline) -> String {
    let axis = match b.axis {
        Axis::Vertical => 'V',
        Axis::Horizontal => 'H',
    };
    format!("{axis}{:+}", b.offset)
}

pub fn baselines_label(bs: &[Baseline]) -> String {
    bs.iter().map(|b| baseline_label(*b)).collect::<Vec<_>>().join("/")
}

type Variant = (String, PipelineConfig);

fn pair(a: Baseline, b: Baseline) -> Vec<Baseline> {
    vec![a, b]
}

/// Configurations of one ablation, labelled, in table order.
pub fn variants(kind: AblationKind, suite: &SuiteConfig) -> Vec<Variant> {
    let base = &suite.pipeline;
    let with = |f: &dyn Fn(&mut PipelineConfig)| {
        let mut c = base.clone();
        f(&mut c);
        c
    };
    let two_vertical = pair(Baseline::vertical(0.24), Baseline::vertical(-0.24));
    match kind {
        AblationKind::Sampling => [
            Sampling::Perturbed { sigma: suite.random_sigma, seed: 0 },
            Sampling::UniformDepth,
            Sampling::UniformInverseDepth,
        ]
        .into_iter()
        .map(|s| {
            let c = with(&|c| {
                c.baselines = two_vertical.clone();
                c.sweep.sampling = s;
            });
            (s.label().to_string(), c)
        })
        .collect(),
        AblationKind::StereoDirection => [
            two_vertical.clone(),
            pair(Baseline::horizontal(0.24), Baseline::horizontal(-0.24)),
            pair(Baseline::horizontal(0.24), Baseline::vertical(0.24)),
        ]
        .into_iter()
        .map(|bs| (baselines_label(&bs), with(&|c| c.baselines = bs.clone())))
        .collect(),
        AblationKind::CascadePlanes => {
            let grids: [&[usize]; 6] = [&[32], &[48], &[64], &[32, 16], &[48, 24], &[64, 32]];
            grids
                .into_iter()
                .map(|planes| {
                    let label = planes.iter().map(|p| p.to_string()).collect::<Vec<_>>().join("+");
                    let c = with(&|c| c.sweep.levels = planes.iter().map(|&p| LevelConfig::new(p)).collect());
                    (label, c)
                })
                .collect()
        }
        AblationKind::NumViews => {
            let v = Baseline::vertical;
            let sets: Vec<Vec<Baseline>> = vec![
                vec![v(0.12)],
                vec![v(0.24)],
                vec![v(-0.12), v(0.12)],
                vec![v(-0.24), v(0.24)],
                vec![v(-0.12), v(0.12), v(0.24)],
                vec![v(-0.24), v(0.24), v(0.4)],
                vec![v(-0.24), v(-0.12), v(0.12), v(0.24)],
                vec![v(-0.4), v(-0.24), v(0.24), v(0.4)],
            ];
            sets.into_iter().map(|bs| (baselines_label(&bs), with(&|c| c.baselines = bs.clone()))).collect()
        }
        AblationKind::BaselineFov => vec![],
    }
}

/// Runs an ablation on every scene of the suite.
pub fn ablate(kind: AblationKind, suite: &SuiteConfig) -> Result<StudyTable> {
    suite.validate()?;
    if kind == AblationKind::BaselineFov {
        return fov_table(suite);
    }
    let columns: Vec<String> = Metrics::COLUMNS.iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    let mut per_scene = Vec::new();
    for (label, config) in variants(kind, suite) {
        let mut all = Vec::with_capacity(suite.scenes.len());
        for scene in &suite.scenes {
            let c = PipelineConfig { scene: scene.clone(), ..config.clone() };
            let m = run_pipeline(&c)?.report.final_metrics;
            log::info!("{kind} {label} {}: abs_rel {:.4}", scene.name(), m.abs_rel);
            per_scene.push(TableRow { scene: scene.name(), variant: label.clone(), values: m.values().to_vec() });
            all.push(m);
        }
        let mean = Metrics::mean(&all).expect("non-empty suite");
        rows.push(TableRow { scene: "mean".into(), variant: label, values: mean.values().to_vec() });
    }
    Ok(StudyTable { kind, columns, rows, per_scene })
}

/// Field-of-view rows, baseline columns, mean synthesized-view MSE.
fn fov_table(suite: &SuiteConfig) -> Result<StudyTable> {
    let grid = suite.pipeline.grid()?;
    let columns: Vec<String> = suite.study.baselines.iter().map(|b| format!("b={b}")).collect();
    let mut per_scene = Vec::new();
    let mut sums: Vec<(String, Vec<f64>)> = Vec::new();
    for source in &suite.scenes {
        let spec = source.load()?;
        let cam = suite.pipeline.camera.unwrap_or_else(|| spec.default_camera());
        let study = baseline_fov_study(&spec, &source.name(), cam, grid, &suite.study)?;
        for (i, curve) in study.curves.iter().enumerate() {
            let variant = fov_label(curve.fov);
            if sums.len() <= i {
                sums.push((variant.clone(), vec![0.0; curve.mse.len()]));
            }
            sums[i].1.iter_mut().zip(&curve.mse).for_each(|(s, m)| *s += m);
            per_scene.push(TableRow { scene: study.scene.clone(), variant, values: curve.mse.clone() });
        }
    }
    let n = suite.scenes.len() as f64;
    let rows = sums
        .into_iter()
        .map(|(variant, s)| TableRow { scene: "mean".into(), variant, values: s.into_iter().map(|x| x / n).collect() })
        .collect();
    Ok(StudyTable { kind: AblationKind::BaselineFov, columns, rows, per_scene })
}

pub fn fov_label(fov: f64) -> String {
    format!("fov{fov}")
}
