//! The optimization loop.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ingest::{PosedView, SfmBundle};
use crate::raster::{backward, render_for_backward};
use crate::scene::{bounding_radius, init_from_points, save_ply, GaussianCloud};
use crate::train::adam::{Adam, AdamParams, GroupRates};
use crate::train::config::TrainConfig;
use crate::train::densify::{densify_and_prune, reset_opacity, DensifyReport, DensifyStats};
use crate::train::loss::loss;

/// One row of the loss curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub iteration: usize,
    pub l1: f64,
    pub dssim: f64,
    pub total: f64,
    pub n_gaussians: usize,
    pub elapsed_s: f64,
}

/// Everything the loop carries besides the cloud.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub iteration: usize,
    pub adam: Adam,
    pub stats: DensifyStats,
    pub history: Vec<LossRecord>,
    pub densify_log: Vec<(usize, DensifyReport)>,
}

impl TrainState {
    pub fn new(n: usize, cfg: &TrainConfig) -> Self {
        Self {
            iteration: 0,
            adam: Adam::new(
                n,
                AdamParams {
                    beta1: cfg.adam_beta1,
                    beta2: cfg.adam_beta2,
                    eps: cfg.adam_eps,
                },
            ),
            stats: DensifyStats::zeros(n),
            history: Vec::new(),
            densify_log: Vec::new(),
        }
    }
}

pub fn write_loss_csv(history: &[LossRecord], path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "iteration,l1,dssim,total,n_gaussians,elapsed_s")?;
    for r in history {
        writeln!(
            f,
            "{},{},{},{},{},{}",
            r.iteration, r.l1, r.dssim, r.total, r.n_gaussians, r.elapsed_s
        )?;
    }
    f.flush()?;
    Ok(())
}

/// Owns the cloud, the optimizer and the view schedule.
pub struct Trainer {
    pub cloud: GaussianCloud,
    pub state: TrainState,
    cfg: TrainConfig,
    views: Vec<PosedView>,
    extent: f64,
    order: Vec<usize>,
    cursor: usize,
    view_rng: ChaCha8Rng,
    densify_rng: ChaCha8Rng,
    start: Instant,
    checkpoint_dir: Option<PathBuf>,
}

impl Trainer {
    /// `extent` scales the split and prune thresholds.
    pub fn new(cloud: GaussianCloud, views: Vec<PosedView>, extent: f64, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        if views.len() < 2 {
            return Err(Error::TooFewTrainViews(views.len()));
        }
        if cloud.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let state = TrainState::new(cloud.len(), &cfg);
        Ok(Self {
            view_rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            densify_rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15),
            order: Vec::new(),
            cursor: 0,
            cloud,
            state,
            cfg,
            views,
            extent,
            start: Instant::now(),
            checkpoint_dir: None,
        })
    }

    /// Checkpoints are written to `dir` every `checkpoint_interval` steps.
    pub fn with_checkpoints(mut self, dir: &Path) -> Self {
        self.checkpoint_dir = Some(dir.to_path_buf());
        self
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    fn next_view(&mut self) -> usize {
        if self.cursor == self.order.len() {
            self.order = (0..self.views.len()).collect();
            self.order.shuffle(&mut self.view_rng);
            self.cursor = 0;
        }
        self.cursor += 1;
        self.order[self.cursor - 1]
    }

    /// Runs one optimization step.
    pub fn step(&mut self) -> Result<LossRecord> {
        let it = self.state.iteration;
        let vi = self.next_view();
        let view = &self.views[vi];
        let cfg = &self.cfg;
        let out = render_for_backward(&self.cloud, &view.camera, cfg.background, &cfg.raster);
        let (value, d_pixels) = loss(&out.view.image, &view.image, cfg.lambda_dssim)?;
        let grads = backward(&self.cloud, &view.camera, &out, cfg.background, &d_pixels, &cfg.raster)?;
        self.state
            .stats
            .record(&grads, view.camera.width(), view.camera.height());
        let rates = GroupRates {
            means: cfg.lr_means_at(it),
            log_scales: cfg.lr_log_scales,
            rotations: cfg.lr_rotations,
            opacity: cfg.lr_opacity,
            sh: cfg.lr_sh,
        };
        self.state.adam.apply(&mut self.cloud, &grads, &rates)?;
        self.state.iteration += 1;
        let done = self.state.iteration;

        if done >= cfg.densify_from && done <= cfg.densify_until() && done % cfg.densify_interval == 0 {
            let report = densify_and_prune(
                &mut self.cloud,
                &mut self.state.adam,
                &mut self.state.stats,
                cfg,
                self.extent,
                &mut self.densify_rng,
            )?;
            self.state.densify_log.push((done, report));
        }
        if done <= cfg.densify_until() && done % cfg.opacity_reset_interval == 0 {
            reset_opacity(&mut self.cloud, &mut self.state.adam, cfg);
        }
        if done % cfg.sh_degree_interval == 0 && self.cloud.sh_degree < cfg.max_sh_degree {
            self.cloud.sh_degree += 1;
        }
        let record = LossRecord {
            iteration: done,
            l1: value.l1,
            dssim: value.dssim,
            total: value.total,
            n_gaussians: self.cloud.len(),
            elapsed_s: self.start.elapsed().as_secs_f64(),
        };
        self.state.history.push(record);
        if let Some(dir) = &self.checkpoint_dir {
            if cfg.checkpoint_interval > 0 && done % cfg.checkpoint_interval == 0 {
                save_ply(&self.cloud, &dir.join(format!("checkpoint_{done:06}.ply")))?;
            }
        }
        Ok(record)
    }

    /// Runs the remaining iterations.
    pub fn run(&mut self) -> Result<()> {
        while self.state.iteration < self.cfg.iterations {
            self.step()?;
        }
        Ok(())
    }

    pub fn into_parts(self) -> (GaussianCloud, TrainState) {
        (self.cloud, self.state)
    }
}

/// Trained model plus the loop's state and timing.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub cloud: GaussianCloud,
    pub state: TrainState,
    pub extent: f64,
    pub elapsed_s: f64,
}

/// Initializes from the bundle's sparse points and trains on every view
/// that carries an image.
pub fn train(bundle: &SfmBundle, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with_checkpoints(bundle, cfg, None)
}

pub fn train_with_checkpoints(bundle: &SfmBundle, cfg: &TrainConfig, checkpoint_dir: Option<&Path>) -> Result<TrainOutcome> {
    let views = bundle
        .views
        .iter()
        .filter(|v| v.image.is_some())
        .map(|v| bundle.posed_view(v))
        .collect::<Result<Vec<_>>>()?;
    let cloud = init_from_points(&bundle.points)?;
    let positions: Vec<_> = bundle.points.iter().map(|p| p.position).collect();
    train_views(cloud, views, bounding_radius(&positions), cfg, checkpoint_dir)
}

/// Trains an existing cloud on explicit views.
pub fn train_views(
    cloud: GaussianCloud,
    views: Vec<PosedView>,
    extent: f64,
    cfg: &TrainConfig,
    checkpoint_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    let start = Instant::now();
    let mut trainer = Trainer::new(cloud, views, extent, cfg.clone())?;
    if let Some(dir) = checkpoint_dir {
        trainer = trainer.with_checkpoints(dir);
    }
    trainer.run()?;
    let (cloud, state) = trainer.into_parts();
    Ok(TrainOutcome {
        cloud,
        state,
        extent,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}
