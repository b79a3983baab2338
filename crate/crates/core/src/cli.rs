//! The `rso-splat` command line.
//!
//! Exit codes: 0 success, 2 bad input, 3 runtime failure. Failures print
//! `{"error": <code>, "message": <text>}` on stderr. Progress logging is
//! controlled by the `RSO_SPLAT_LOG` environment variable.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::json;

use crate::bench::{run_benchmark, EvalReport};
use crate::camera::Intrinsics;
use crate::error::{Error, Result};
use crate::image::{ImageRGB, Rgb};
use crate::ingest::{
    chroma_key, manifest::MANIFEST_FILE, resize, split_train_test, ChromaKeyConfig, Dataset, DatasetManifest, Format,
    Preprocessing, SfmBundle, DEFAULT_HOLDOUT_EVERY,
};
use crate::metrics::{evaluate, QualityScores};
use crate::raster::render_with;
use crate::scene::{load_ply, save_ply};
use crate::synth::{make_dataset, ring_camera, PrimitiveScene, SynthConfig};
use crate::train::{train_with_checkpoints, write_loss_csv, TrainConfig};

pub const LOG_ENV: &str = "RSO_SPLAT_LOG";

#[derive(Debug, Parser)]
#[command(name = "rso-splat", version, about = "Gaussian splatting reconstruction toolkit")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ray-trace the synthetic mock-up and write a COLMAP-style dataset.
    Synth(SynthArgs),
    /// Convert a COLMAP reconstruction plus images into a dataset directory.
    Ingest(IngestArgs),
    /// Train a Gaussian cloud on a dataset's training views.
    Train(TrainArgs),
    /// Render one dataset view from a trained model.
    Render(RenderArgs),
    /// Render a ring of novel views around a model.
    Orbit(OrbitArgs),
    /// Score a model on a dataset split.
    Eval(EvalArgs),
    /// Train, evaluate and measure resources on one or more datasets.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 36)]
    pub views: usize,
    /// Ring radius in world units.
    #[arg(long, default_value_t = 2.5)]
    pub radius: f64,
    /// Camera height above the target.
    #[arg(long, default_value_t = 0.6)]
    pub height: f64,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 192)]
    pub image_height: usize,
    #[arg(long, default_value_t = 6)]
    pub holdout_every: usize,
    #[arg(long, default_value_t = 4000)]
    pub points: usize,
    /// Point noise as a fraction of the scene extent.
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SparseFormat {
    Text,
    Binary,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Directory holding cameras/images/points3D (or sparse/0 below it).
    #[arg(long)]
    pub colmap: PathBuf,
    /// Directory holding the images named in the reconstruction.
    #[arg(long)]
    pub images: PathBuf,
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Replace green-screen pixels with black.
    #[arg(long)]
    pub chroma_key: bool,
    /// Resample images to WIDTHxHEIGHT and rescale intrinsics.
    #[arg(long, value_parser = parse_size)]
    pub resize: Option<[usize; 2]>,
    #[arg(long, default_value_t = DEFAULT_HOLDOUT_EVERY)]
    pub holdout_every: usize,
    #[arg(long, value_enum, default_value_t = SparseFormat::Text)]
    pub format: SparseFormat,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// TOML training configuration; missing keys take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config's iteration count.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    pub print_config: bool,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<TrainConfig> {
        let mut cfg = match &self.config {
            Some(p) => TrainConfig::load(p)?,
            None => TrainConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.iterations {
            cfg.iterations = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory (COLMAP files + images/, optional manifest.json).
    #[arg(long, required_unless_present = "print_config")]
    pub data: Option<PathBuf>,
    /// Output directory for the model, loss curve and checkpoints.
    #[arg(long, required_unless_present = "print_config")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// View image name or 0-based index.
    #[arg(long)]
    pub view: String,
    /// Output PNG.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write float RGBA planes to this file.
    #[arg(long)]
    pub raw: Option<PathBuf>,
    #[arg(long, value_parser = parse_rgb, default_value = "0,0,0")]
    pub background: Rgb,
}

#[derive(Debug, Args)]
pub struct OrbitArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Cameras per full turn.
    #[arg(long, default_value_t = 36)]
    pub n: usize,
    /// Frames to render (default `n`); indices past `n` wrap around.
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long, default_value_t = 2.5)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.6)]
    pub height: f64,
    #[arg(long, default_value_t = 640)]
    pub width: usize,
    #[arg(long, default_value_t = 480)]
    pub image_height: usize,
    #[arg(long, value_parser = parse_rgb, default_value = "0,0,0")]
    pub background: Rgb,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SplitChoice {
    Train,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitChoice::Test)]
    pub split: SplitChoice,
    #[arg(long, value_parser = parse_rgb, default_value = "0,0,0")]
    pub background: Rgb,
    /// Directory for per-view CSV and aggregate JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// One or more dataset directories; each becomes a report row.
    #[arg(long, num_args = 1.., required_unless_present = "print_config")]
    pub data: Vec<PathBuf>,
    #[arg(long, required_unless_present = "print_config")]
    pub out: Option<PathBuf>,
    /// Render loops for the framerate protocol, 10 to 20.
    #[arg(long, default_value_t = 10)]
    pub loops: usize,
    #[command(flatten)]
    pub config: ConfigArgs,
}

fn parse_size(s: &str) -> std::result::Result<[usize; 2], String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got `{s}`"))?;
    let w = w.trim().parse().map_err(|e| format!("{e}"))?;
    let h = h.trim().parse().map_err(|e| format!("{e}"))?;
    Ok([w, h])
}

fn parse_rgb(s: &str) -> std::result::Result<Rgb, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() != 3 || v.iter().any(|c| !(0.0..=1.0).contains(c)) {
        return Err("expected three comma-separated values in [0, 1]".into());
    }
    Ok([v[0], v[1], v[2]])
}

fn quantize(img: &ImageRGB) -> ImageRGB {
    let data = img.data().iter().map(|v| (v * 255.0).round() / 255.0).collect();
    ImageRGB::new(img.width(), img.height(), data).expect("quantized image stays in range")
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        views: a.views,
        radius: a.radius,
        height: a.height,
        width: a.width,
        image_height: a.image_height,
        holdout_every: a.holdout_every,
        points: a.points,
        noise_fraction: a.noise,
        seed: a.seed,
    };
    let ds = make_dataset(&PrimitiveScene::mockup(), &cfg)?;
    ds.write(&a.out)?;
    info!("wrote {} views and {} points to {}", ds.bundle.views.len(), ds.bundle.points.len(), a.out.display());
    Ok(())
}

fn cmd_ingest(a: &IngestArgs) -> Result<()> {
    let mut bundle = SfmBundle::load_sparse(&a.colmap)?;
    bundle.load_images(&a.images)?;
    let key = a.chroma_key.then(ChromaKeyConfig::default);
    if let Some([w, h]) = a.resize {
        bundle.cameras = bundle
            .cameras
            .iter()
            .map(|(id, k)| (*id, k.rescaled(w, h)))
            .collect::<std::collections::BTreeMap<u32, Intrinsics>>();
    }
    for v in &mut bundle.views {
        let mut img = v.image.take().expect("images were loaded");
        if let Some([w, h]) = a.resize {
            img = resize(&img, w, h)?;
        }
        img = quantize(&img);
        if let Some(k) = &key {
            img = chroma_key(&img, k);
        }
        v.image = Some(img);
    }
    bundle.validate()?;
    let format = match a.format {
        SparseFormat::Text => Format::Text,
        SparseFormat::Binary => Format::Binary,
    };
    bundle.write_sparse(&a.out.join("sparse").join("0"), format)?;
    let images = a.out.join("images");
    std::fs::create_dir_all(&images)?;
    for v in &bundle.views {
        if let Some(parent) = Path::new(&v.name).parent() {
            std::fs::create_dir_all(images.join(parent))?;
        }
        v.image.as_ref().unwrap().save_png(&images.join(&v.name))?;
    }
    let split = split_train_test(bundle.views.len(), a.holdout_every)?;
    DatasetManifest::new(
        "colmap",
        &bundle.views,
        &split,
        a.holdout_every,
        Preprocessing {
            chroma_key: key,
            resize: a.resize,
        },
    )
    .save(&a.out.join(MANIFEST_FILE))?;
    info!("ingested {} views into {}", bundle.views.len(), a.out.display());
    Ok(())
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let cfg = a.config.resolve()?;
    if a.config.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let (data, out) = (a.data.as_ref().unwrap(), a.out.as_ref().unwrap());
    let ds = Dataset::load(data)?;
    let mut bundle = ds.bundle.clone();
    for (i, v) in bundle.views.iter_mut().enumerate() {
        if !ds.split.train.contains(&i) {
            v.image = None;
        }
    }
    std::fs::create_dir_all(out)?;
    let ckpt = out.join("checkpoints");
    if cfg.checkpoint_interval > 0 {
        std::fs::create_dir_all(&ckpt)?;
    }
    info!("training {} iterations on {} views", cfg.iterations, ds.split.train.len());
    let outcome = train_with_checkpoints(&bundle, &cfg, (cfg.checkpoint_interval > 0).then_some(ckpt.as_path()))?;
    outcome.cloud.validate()?;
    save_ply(&outcome.cloud, &out.join("point_cloud.ply"))?;
    write_loss_csv(&outcome.state.history, &out.join("loss.csv"))?;
    std::fs::write(out.join("config.toml"), cfg.to_toml())?;
    let summary = json!({
        "iterations": cfg.iterations,
        "n_gaussians": outcome.cloud.len(),
        "train_time_s": outcome.elapsed_s,
        "extent": outcome.extent,
        "seed": cfg.seed,
    });
    std::fs::write(out.join("train_summary.json"), serde_json::to_string_pretty(&summary)?)?;
    println!("{summary}");
    Ok(())
}

fn find_view(bundle: &SfmBundle, key: &str) -> Result<usize> {
    if let Some(i) = bundle.views.iter().position(|v| v.name == key) {
        return Ok(i);
    }
    match key.parse::<usize>() {
        Ok(i) if i < bundle.views.len() => Ok(i),
        _ => Err(Error::InvalidConfig(format!("no view named or indexed `{key}`"))),
    }
}

fn cmd_render(a: &RenderArgs) -> Result<()> {
    let cloud = load_ply(&a.model)?;
    let bundle = SfmBundle::load_sparse(&a.data)?;
    let i = find_view(&bundle, &a.view)?;
    let cam = bundle.camera(&bundle.views[i])?;
    let view = render_with(&cloud, &cam, a.background, &Default::default());
    view.image.save_png(&a.out)?;
    if let Some(raw) = &a.raw {
        view.write_raw(raw)?;
    }
    Ok(())
}

fn cmd_orbit(a: &OrbitArgs) -> Result<()> {
    let cloud = load_ply(&a.model)?;
    if a.n < 2 {
        return Err(Error::InvalidConfig("--n must be at least 2".into()));
    }
    let k = Intrinsics::centered(1, a.width, a.image_height);
    k.validate()?;
    std::fs::create_dir_all(&a.out)?;
    let frames = a.frames.unwrap_or(a.n);
    for f in 0..frames {
        let cam = ring_camera(f, a.n, a.radius, a.height, [0.0; 3], k);
        let view = render_with(&cloud, &cam, a.background, &Default::default());
        view.image.save_png(&a.out.join(format!("frame_{f:03}.png")))?;
    }
    info!("rendered {frames} frames to {}", a.out.display());
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let cloud = load_ply(&a.model)?;
    let ds = Dataset::load(&a.data)?;
    let views = match a.split {
        SplitChoice::Train => ds.train_views()?,
        SplitChoice::Test => ds.test_views()?,
        SplitChoice::All => ds.posed_images(&(0..ds.bundle.views.len()).collect::<Vec<_>>())?,
    };
    let scores: QualityScores = evaluate(&cloud, &views, a.background)?;
    if let Some(out) = &a.out {
        std::fs::create_dir_all(out)?;
        scores.write_csv(&out.join("per_view.csv"))?;
        scores.write_json(&out.join("scores.json"))?;
    }
    println!("{}", serde_json::to_string(&scores)?);
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> Result<()> {
    let cfg = a.config.resolve()?;
    if a.config.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let out = a.out.as_ref().unwrap();
    let cases = a
        .data
        .iter()
        .map(|d| {
            let label = d
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| d.display().to_string());
            Ok((label, Dataset::load(d)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let (report, clouds): (EvalReport, _) = run_benchmark(&cases, &cfg, a.loops)?;
    std::fs::create_dir_all(out)?;
    report.save_json(&out.join("report.json"))?;
    report.save_table(&out.join("report.txt"))?;
    for ((label, _), cloud) in cases.iter().zip(&clouds) {
        save_ply(cloud, &out.join(format!("{label}.ply")))?;
    }
    print!("{}", report.table());
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Ingest(a) => cmd_ingest(a),
        Command::Train(a) => cmd_train(a),
        Command::Render(a) => cmd_render(a),
        Command::Orbit(a) => cmd_orbit(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

/// Error JSON printed on stderr.
pub fn error_json(e: &Error) -> String {
    json!({ "error": e.code(), "message": e.to_string() }).to_string()
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_input_error() {
        2
    } else {
        3
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn"))
        .format_timestamp(None)
        .try_init();
    let result = match cli.threads {
        Some(0) => Err(Error::InvalidConfig("--threads must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(Error::InvalidConfig(e.to_string())),
        },
        None => dispatch(&cli),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn value_parsers() {
        assert_eq!(parse_size("640x480").unwrap(), [640, 480]);
        assert!(parse_size("640").is_err());
        assert_eq!(parse_rgb("0,0.5,1").unwrap(), [0.0, 0.5, 1.0]);
        assert!(parse_rgb("0,2,1").is_err());
    }

    #[test]
    fn error_json_shape() {
        let e = Error::MissingCamerasFile(PathBuf::from("/x"));
        let v: serde_json::Value = serde_json::from_str(&error_json(&e)).unwrap();
        assert_eq!(v["error"], "MissingCamerasFile");
        assert_eq!(exit_code(&e), 2);
        assert_eq!(exit_code(&Error::NonFiniteGradient("x".into())), 3);
    }
}
