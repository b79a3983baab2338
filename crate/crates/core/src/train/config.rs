use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Rgb;
use crate::raster::RasterConfig;

/// Every training knob, loadable from and printable as TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub iterations: usize,
    pub seed: u64,
    /// Weight of the D-SSIM term.
    pub lambda_dssim: f64,
    pub background: Rgb,

    pub lr_means: f64,
    /// The mean learning rate decays exponentially to `lr_means * lr_means_final_factor`.
    pub lr_means_final_factor: f64,
    pub lr_log_scales: f64,
    pub lr_rotations: f64,
    pub lr_opacity: f64,
    pub lr_sh: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,

    pub densify_interval: usize,
    pub densify_from: usize,
    /// Last densification iteration; `None` means half the run.
    pub densify_until: Option<usize>,
    /// Threshold on the mean NDC-space positional gradient.
    pub densify_grad_threshold: f64,
    /// Gaussians larger than this fraction of the scene extent are split
    /// rather than cloned.
    pub split_scale_fraction: f64,
    pub split_factor: f64,
    pub split_children: usize,
    pub prune_opacity: f64,
    /// Gaussians larger than this fraction of the scene extent are pruned.
    pub prune_scale_fraction: f64,
    /// Densification is skipped once the cloud reaches this size.
    pub max_gaussians: usize,
    pub opacity_reset_interval: usize,
    pub opacity_reset_value: f64,
    pub sh_degree_interval: usize,
    pub max_sh_degree: usize,

    /// Write a PLY every this many iterations; 0 disables checkpoints.
    pub checkpoint_interval: usize,
    pub raster: RasterConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 7000,
            seed: 0,
            lambda_dssim: 0.2,
            background: [0.0; 3],
            lr_means: 1.6e-4,
            lr_means_final_factor: 0.01,
            lr_log_scales: 5e-3,
            lr_rotations: 1e-3,
            lr_opacity: 5e-2,
            lr_sh: 2.5e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-15,
            densify_interval: 100,
            densify_from: 500,
            densify_until: None,
            densify_grad_threshold: 2e-4,
            split_scale_fraction: 0.01,
            split_factor: 1.6,
            split_children: 2,
            prune_opacity: 0.005,
            prune_scale_fraction: 0.1,
            max_gaussians: 200_000,
            opacity_reset_interval: 3000,
            opacity_reset_value: 0.01,
            sh_degree_interval: 1000,
            max_sh_degree: 3,
            checkpoint_interval: 0,
            raster: RasterConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        let rates = [
            self.lr_means,
            self.lr_log_scales,
            self.lr_rotations,
            self.lr_opacity,
            self.lr_sh,
        ];
        if !rates.iter().all(|r| *r > 0.0 && r.is_finite()) {
            return bad("learning rates must be positive");
        }
        if !(self.lr_means_final_factor > 0.0) {
            return bad("lr_means_final_factor must be positive");
        }
        if !(0.0..=1.0).contains(&self.lambda_dssim) {
            return bad("lambda_dssim must lie in [0, 1]");
        }
        if self.densify_interval == 0 || self.opacity_reset_interval == 0 || self.sh_degree_interval == 0 {
            return bad("intervals must be at least 1");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) || !(self.adam_eps > 0.0) {
            return bad("invalid Adam hyperparameters");
        }
        if !(self.split_factor > 1.0) || self.split_children == 0 {
            return bad("split_factor must exceed 1 and split_children be at least 1");
        }
        if !(self.opacity_reset_value > 0.0 && self.opacity_reset_value < 1.0) {
            return bad("opacity_reset_value must lie in (0, 1)");
        }
        if self.max_sh_degree > crate::scene::sh::MAX_DEGREE {
            return bad("max_sh_degree must be at most 3");
        }
        if self.background.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return bad("background channels must lie in [0, 1]");
        }
        if !(self.raster.alpha_cap < 1.0) {
            return bad("raster.alpha_cap must be below 1 for training");
        }
        Ok(())
    }

    pub fn densify_until(&self) -> usize {
        self.densify_until.unwrap_or(self.iterations / 2)
    }

    /// Mean learning rate at `iteration` (log-linear decay over the run).
    pub fn lr_means_at(&self, iteration: usize) -> f64 {
        if self.iterations == 0 {
            return self.lr_means;
        }
        let t = (iteration as f64 / self.iterations as f64).clamp(0.0, 1.0);
        self.lr_means * self.lr_means_final_factor.powf(t)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let cfg = TrainConfig {
            densify_until: Some(1234),
            ..TrainConfig::default()
        };
        assert_eq!(TrainConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        let d = TrainConfig::default();
        assert_eq!(TrainConfig::from_toml(&d.to_toml()).unwrap(), d);
    }

    #[test]
    fn partial_files_fill_defaults() {
        let cfg = TrainConfig::from_toml("iterations = 10\n[raster]\ntile_size = 8\n").unwrap();
        assert_eq!(cfg.iterations, 10);
        assert_eq!(cfg.raster.tile_size, 8);
        assert_eq!(cfg.lambda_dssim, 0.2);
    }

    #[test]
    fn rejects_invalid() {
        assert!(TrainConfig::from_toml("lambda_dssim = 1.5").is_err());
        assert!(TrainConfig::from_toml("lr_sh = 0.0").is_err());
        assert!(TrainConfig::from_toml("densify_interval = 0").is_err());
        assert!(TrainConfig::from_toml("no_such_key = 1").is_err());
    }

    #[test]
    fn mean_lr_decays_by_final_factor() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.lr_means_at(0), 1.6e-4);
        assert!((cfg.lr_means_at(7000) - 1.6e-6).abs() < 1e-18);
        assert!(cfg.lr_means_at(3500) < 1.6e-4);
    }
}
