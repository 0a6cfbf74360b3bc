//! Two-stage depth pipeline: coarse depth, view synthesis, plane sweep,
//! evaluation and ablation runners.

pub mod ablate;
pub mod coarse;
pub mod loss;
pub mod metrics;
pub mod run;
pub mod study;

pub use ablate::{ablate, baseline_label, AblationKind, StudyTable, SuiteConfig, TableRow};
pub use coarse::CoarseProvider;
pub use loss::{berhu, berhu_depth, berhu_value, combine_losses, total_loss, LossReport, LossWeights};
pub use metrics::{eval_metrics, Metrics};
pub use run::{run_pipeline, two_stage_run, Outputs, PipelineConfig, PipelineRun, Report, SceneSource, ViewSummary};
pub use study::{baseline_fov_study, mse, FovCurve, SceneStudy, StudyConfig};
