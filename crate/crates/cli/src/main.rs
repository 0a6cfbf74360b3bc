use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use panosweep::dibr::synthesize_views;
use panosweep::io::{self, load_pipeline_config, load_suite_config};
use panosweep::pipeline::study::STUDY_CSV_HEADER;
use panosweep::pipeline::{
    ablate, baseline_fov_study, eval_metrics, run_pipeline, AblationKind, PipelineConfig, SuiteConfig,
};
use panosweep::scene::{builtin_scene, raycast_erp};
use panosweep::sweep::{run_sweep, SweepView};
use panosweep::{ErrorKind, SceneSpec};

#[derive(Parser)]
#[command(name = "panosweep", version, about = "Plane-sweep depth for 360° panoramas")]
struct Cli {
    /// JSON configuration (scene, pipeline or suite depending on the command).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides the master seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ray-cast a scene into rgb.png and depth.pfm.
    Render {
        /// Built-in scene name, used when no --config is given.
        #[arg(long)]
        scene: Option<String>,
    },
    /// Synthesize views from an RGB-D panorama at the configured baselines.
    Synth {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        depth: PathBuf,
    },
    /// Estimate depth for a target panorama from synthesized views.
    Sweep {
        #[arg(long)]
        image: PathBuf,
        /// Manifest written by `synth`.
        #[arg(long)]
        views: PathBuf,
        /// Ground-truth depth; adds metrics.json.
        #[arg(long)]
        gt: Option<PathBuf>,
    },
    /// Full two-stage run with evaluation.
    Pipeline,
    /// Run an ablation over the scene suite.
    Ablate {
        /// sampling, stereo-direction, cascade-planes, num-views or baseline-fov.
        #[arg(value_parser = parse_kind)]
        kind: AblationKind,
    },
    /// Synthesized-view error against baseline and field of view.
    StudyBaselineFov,
}

fn parse_kind(s: &str) -> std::result::Result<AblationKind, String> {
    s.parse().map_err(|_| {
        let names: Vec<_> = AblationKind::ALL.iter().map(|k| k.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 1: configuration or usage, 2: I/O, 3: numerical failure.
fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(pe) = cause.downcast_ref::<panosweep::Error>() {
            return match pe.kind() {
                ErrorKind::Config => 1,
                ErrorKind::Io => 2,
                ErrorKind::Numerical => 3,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!(panosweep::Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("setting up the thread pool")?;
    }
    std::fs::create_dir_all(&cli.out)
        .map_err(panosweep::Error::Io)
        .with_context(|| format!("creating {}", cli.out.display()))?;
    let out = cli.out.as_path();
    match &cli.command {
        Command::Render { scene } => render(&cli, scene.as_deref(), out),
        Command::Synth { image, depth } => synth(&cli, image, depth, out),
        Command::Sweep { image, views, gt } => sweep(&cli, image, views, gt.as_deref(), out),
        Command::Pipeline => pipeline(&cli, out),
        Command::Ablate { kind } => run_ablation(&cli, *kind, out),
        Command::StudyBaselineFov => study(&cli, out),
    }
}

fn pipeline_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut c = match &cli.config {
        Some(p) => load_pipeline_config(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    c.validate()?;
    Ok(c)
}

fn suite_config(cli: &Cli) -> Result<SuiteConfig> {
    let mut s = match &cli.config {
        Some(p) => load_suite_config(p)?,
        None => SuiteConfig::default(),
    };
    if let Some(seed) = cli.seed {
        s.pipeline.seed = seed;
    }
    s.validate()?;
    Ok(s)
}

/// A render config is a scene description or a pipeline config.
fn render(cli: &Cli, builtin: Option<&str>, out: &Path) -> Result<()> {
    let (scene, config) = match (&cli.config, builtin) {
        (Some(_), Some(_)) => bail!(panosweep::Error::Config("use either --config or --scene".into())),
        (Some(p), None) => {
            let value: serde_json::Value = io::read_json(p)?;
            if value.get("primitives").is_some() {
                let spec: SceneSpec = serde_json::from_value(value).map_err(panosweep::Error::from)?;
                spec.validate()?;
                (spec, PipelineConfig::default())
            } else {
                let c = load_pipeline_config(p)?;
                (c.scene.load()?, c)
            }
        }
        (None, name) => (builtin_scene(name.unwrap_or("room"))?, PipelineConfig::default()),
    };
    let cam = config.camera.unwrap_or_else(|| scene.default_camera());
    let (image, depth) = raycast_erp(&scene, cam, config.grid()?)?;
    io::write_png(out.join("rgb.png"), &image)?;
    io::write_depth_pfm(out.join("depth.pfm"), &depth)?;
    println!("wrote {} and {}", out.join("rgb.png").display(), out.join("depth.pfm").display());
    Ok(())
}

fn synth(cli: &Cli, image: &Path, depth: &Path, out: &Path) -> Result<()> {
    let c = pipeline_config(cli)?;
    let img = io::read_png(image)?;
    let d = io::read_depth_pfm(depth, c.sweep.d_min, c.sweep.d_max)?;
    if d.grid() != img.grid() {
        bail!(panosweep::Error::Config("image and depth sizes differ".into()));
    }
    let views = synthesize_views(&img, &d, &c.baselines, c.splat)?;
    let manifest = io::save_views(out, &views)?;
    println!("wrote {} views, manifest {}", views.len(), manifest.display());
    Ok(())
}

fn sweep(cli: &Cli, image: &Path, manifest: &Path, gt: Option<&Path>, out: &Path) -> Result<()> {
    let c = pipeline_config(cli)?;
    let target = io::read_png(image)?;
    let views = io::load_views(manifest)?;
    let refs: Vec<SweepView<'_>> =
        views.iter().map(|v| SweepView { image: &v.image, baseline: v.baseline, mask: Some(&v.mask) }).collect();
    let result = run_sweep(&target, &refs, &c.seeded_sweep())?;
    for (k, level) in result.levels.iter().enumerate() {
        io::write_depth_pfm(out.join(format!("level_{}.pfm", k + 1)), level)?;
    }
    io::write_depth_pfm(out.join("depth.pfm"), result.depth())?;
    if let Some(gt) = gt {
        let gt = io::read_depth_pfm(gt, c.sweep.d_min, c.sweep.d_max)?;
        let m = eval_metrics(result.depth(), &gt)?;
        io::write_json(out.join("metrics.json"), &m)?;
        println!("abs_rel {:.4} delta1 {:.4}", m.abs_rel, m.delta1);
    }
    println!("wrote {}", out.join("depth.pfm").display());
    Ok(())
}

fn pipeline(cli: &Cli, out: &Path) -> Result<()> {
    let c = pipeline_config(cli)?;
    let run = run_pipeline(&c)?;
    let o = &c.outputs;
    io::write_json(out.join(&o.report_json), &run.report)?;
    io::write_text(out.join(&o.report_csv), &run.report.to_csv())?;
    if let Some(f) = &o.final_depth {
        io::write_depth_pfm(out.join(f), run.final_depth())?;
    }
    if let Some(f) = &o.coarse_depth {
        io::write_depth_pfm(out.join(f), &run.coarse)?;
    }
    if o.views {
        io::save_views(out, &run.views)?;
    }
    let m = &run.report.final_metrics;
    println!("{}: abs_rel {:.4} delta1 {:.4}", run.report.scene, m.abs_rel, m.delta1);
    Ok(())
}

fn run_ablation(cli: &Cli, kind: AblationKind, out: &Path) -> Result<()> {
    let suite = suite_config(cli)?;
    let table = ablate(kind, &suite)?;
    let stem = format!("ablation_{}", kind.name().replace('-', "_"));
    io::write_text(out.join(format!("{stem}.csv")), &table.to_csv())?;
    io::write_text(out.join(format!("{stem}_per_scene.csv")), &table.per_scene_csv())?;
    io::write_json(out.join(format!("{stem}.json")), &table)?;
    print!("{}", table.to_csv());
    Ok(())
}

fn study(cli: &Cli, out: &Path) -> Result<()> {
    let suite = suite_config(cli)?;
    let grid = suite.pipeline.grid()?;
    let mut csv = String::from(STUDY_CSV_HEADER);
    let mut all = Vec::new();
    for source in &suite.scenes {
        let spec = source.load()?;
        let cam = suite.pipeline.camera.unwrap_or_else(|| spec.default_camera());
        let s = baseline_fov_study(&spec, &source.name(), cam, grid, &suite.study)?;
        csv.push_str(&s.csv_rows());
        all.push(s);
    }
    io::write_text(out.join("study_baseline_fov.csv"), &csv)?;
    io::write_json(out.join("study_baseline_fov.json"), &all)?;
    print!("{csv}");
    Ok(())
}
