//! Training time, peak memory and render framerate, reported per case.

pub mod fps;
pub mod memory;

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::ingest::Dataset;
use crate::metrics::evaluate;
use crate::scene::{bounding_radius, init_from_points, GaussianCloud};
use crate::train::{train_views, TrainConfig};

pub use fps::{measure_fps, measure_fps_with, median5_mean, Clock, ScriptedClock, SystemClock};
pub use memory::{measure_peak_memory, tracked_peak_bytes, MemoryReport, MemorySampler, TrackingAllocator};

/// Shipped JSON schema for [`EvalReport`].
pub const REPORT_SCHEMA: &str = include_str!("../../schema/eval_report.schema.json");

pub const MEMORY_NOTE: &str =
    "Peak mem columns report process resident memory sampled at 1 Hz on a CPU build, not GPU VRAM.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub case: String,
    pub method: String,
    pub ssim: f64,
    pub psnr: f64,
    /// Always null: no perceptual network is available.
    pub lpips: Option<f64>,
    pub train_peak_mem_mb: f64,
    /// Heap high-water mark when the tracking allocator is installed.
    pub train_peak_alloc_mb: Option<f64>,
    pub train_time_s: f64,
    pub render_peak_mem_mb: f64,
    pub render_fps: f64,
    pub n_gaussians: usize,
    pub test_views: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub cpu: String,
    pub threads: usize,
    pub build_profile: String,
    pub target: String,
    pub version: String,
}

impl Environment {
    pub fn detect() -> Self {
        let cpu = std::fs::read_to_string("/proc/cpuinfo")
            .ok()
            .and_then(|s| {
                s.lines()
                    .find(|l| l.starts_with("model name"))
                    .and_then(|l| l.split(':').nth(1))
                    .map(|v| v.trim().to_string())
            })
            .unwrap_or_else(|| std::env::consts::ARCH.to_string());
        Self {
            cpu,
            threads: rayon::current_num_threads(),
            build_profile: if cfg!(debug_assertions) { "debug" } else { "release" }.to_string(),
            target: format!("{}-{}", std::env::consts::ARCH, std::env::consts::OS),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    pub environment: Environment,
    pub config_hash: String,
    pub seed: u64,
    pub fps_loops: usize,
    pub memory_note: String,
}

/// SHA-256 of the canonical TOML form of the config.
pub fn config_hash(cfg: &TrainConfig) -> String {
    Sha256::digest(cfg.to_toml().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Three aligned blocks: quality, training cost, rendering cost.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let w = self
            .rows
            .iter()
            .map(|r| r.case.len().max(r.method.len()))
            .max()
            .unwrap_or(0)
            .max(6);
        let _ = writeln!(out, "{:<w$}  {:<w$}  {:>8}  {:>8}  {:>8}", "Case", "Method", "SSIM", "PSNR", "LPIPS");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<w$}  {:<w$}  {:>8.4}  {:>8.2}  {:>8}",
                r.case, r.method, r.ssim, r.psnr, "n/a"
            );
        }
        out.push('\n');
        let _ = writeln!(out, "{:<w$}  {:<w$}  {:>14}  {:>14}", "Case", "Method", "Peak mem (MB)*", "Train time (s)");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<w$}  {:<w$}  {:>14.1}  {:>14.1}",
                r.case, r.method, r.train_peak_mem_mb, r.train_time_s
            );
        }
        out.push('\n');
        let _ = writeln!(out, "{:<w$}  {:<w$}  {:>14}  {:>8}", "Case", "Method", "Peak mem (MB)*", "FPS");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<w$}  {:<w$}  {:>14.1}  {:>8.2}",
                r.case, r.method, r.render_peak_mem_mb, r.render_fps
            );
        }
        let _ = writeln!(out, "\n* {MEMORY_NOTE}");
        out
    }

    pub fn save_table(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.table())?;
        Ok(())
    }
}

/// Result of benchmarking one dataset.
#[derive(Debug, Clone)]
pub struct CaseResult {
    pub row: ReportRow,
    pub cloud: GaussianCloud,
}

/// Trains on the dataset's train split, evaluates the test split and
/// measures memory and framerate.
pub fn run_case(case: &str, data: &Dataset, cfg: &TrainConfig, fps_loops: usize) -> Result<CaseResult> {
    fps::check_loops(fps_loops)?;
    let train = data.train_views()?;
    let test = data.test_views()?;
    if test.is_empty() {
        return Err(crate::Error::EmptyTestSet);
    }
    let positions: Vec<_> = data.bundle.points.iter().map(|p| p.position).collect();
    let extent = bounding_radius(&positions);

    memory::reset_tracked_peak();
    let start = Instant::now();
    let (outcome, train_mem) = measure_peak_memory(|| -> Result<_> {
        let cloud = init_from_points(&data.bundle.points)?;
        train_views(cloud, train, extent, cfg, None)
    });
    let outcome = outcome?;
    let train_time_s = start.elapsed().as_secs_f64();
    let train_peak_alloc_mb = tracked_peak_bytes().map(|b| b as f64 / memory::MB);

    let scores = evaluate(&outcome.cloud, &test, cfg.background)?;
    let (fps, render_mem) = measure_peak_memory(|| measure_fps(&outcome.cloud, &test, cfg.background, fps_loops));
    let fps = fps?;
    Ok(CaseResult {
        row: ReportRow {
            case: case.to_string(),
            method: "3DGS (CPU)".to_string(),
            ssim: scores.ssim,
            psnr: scores.psnr,
            lpips: None,
            train_peak_mem_mb: train_mem.peak_mb(),
            train_peak_alloc_mb,
            train_time_s,
            render_peak_mem_mb: render_mem.peak_mb(),
            render_fps: fps,
            n_gaussians: outcome.cloud.len(),
            test_views: test.len(),
        },
        cloud: outcome.cloud,
    })
}

/// Benchmarks every `(case label, dataset)` pair in order.
pub fn run_benchmark(cases: &[(String, Dataset)], cfg: &TrainConfig, fps_loops: usize) -> Result<(EvalReport, Vec<GaussianCloud>)> {
    let mut rows = Vec::new();
    let mut clouds = Vec::new();
    for (label, data) in cases {
        let r = run_case(label, data, cfg, fps_loops)?;
        rows.push(r.row);
        clouds.push(r.cloud);
    }
    Ok((
        EvalReport {
            rows,
            environment: Environment::detect(),
            config_hash: config_hash(cfg),
            seed: cfg.seed,
            fps_loops,
            memory_note: MEMORY_NOTE.to_string(),
        },
        clouds,
    ))
}
