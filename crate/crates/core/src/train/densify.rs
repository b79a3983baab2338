//! Adaptive density control: clone, split, prune and opacity reset.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, Vec3};
use crate::raster::Gradients;
use crate::scene::GaussianCloud;
use crate::train::adam::Adam;
use crate::train::config::TrainConfig;

/// Per-Gaussian statistics gathered between densification steps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DensifyStats {
    /// Sum of NDC-space positional gradient norms.
    pub grad_accum: Vec<f64>,
    /// Number of views in which the Gaussian was visible.
    pub grad_count: Vec<u32>,
    /// Sum of world-space mean gradients, used to nudge clones.
    pub mean_grad_accum: Vec<Vec3>,
}

impl DensifyStats {
    pub fn zeros(n: usize) -> Self {
        Self {
            grad_accum: vec![0.0; n],
            grad_count: vec![0; n],
            mean_grad_accum: vec![[0.0; 3]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.grad_accum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grad_accum.is_empty()
    }

    /// Records one view's gradients. Pixel gradients are scaled to NDC.
    pub fn record(&mut self, grads: &Gradients, width: usize, height: usize) {
        let (sx, sy) = (0.5 * width as f64, 0.5 * height as f64);
        for i in 0..grads.len() {
            if !grads.visible[i] {
                continue;
            }
            let [gx, gy] = grads.mean2d[i];
            self.grad_accum[i] += ((gx * sx).powi(2) + (gy * sy).powi(2)).sqrt();
            self.grad_count[i] += 1;
            self.mean_grad_accum[i] = linalg::add(self.mean_grad_accum[i], grads.means[i]);
        }
    }

    pub fn mean_grad(&self, i: usize) -> f64 {
        if self.grad_count[i] == 0 {
            0.0
        } else {
            self.grad_accum[i] / self.grad_count[i] as f64
        }
    }
}

/// What one densification pass did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DensifyReport {
    pub cloned: usize,
    pub split: usize,
    pub pruned: usize,
}

/// Clones or splits high-gradient Gaussians, then prunes transparent and
/// oversized ones. Optimizer moments of new Gaussians start at zero and the
/// gradient statistics are cleared.
pub fn densify_and_prune<R: Rng>(
    cloud: &mut GaussianCloud,
    adam: &mut Adam,
    stats: &mut DensifyStats,
    cfg: &TrainConfig,
    extent: f64,
    rng: &mut R,
) -> Result<DensifyReport> {
    let n = cloud.len();
    assert_eq!(adam.len(), n);
    assert_eq!(stats.len(), n);
    let mut report = DensifyReport::default();
    let split_threshold = cfg.split_scale_fraction * extent;
    let mut keep = vec![true; n];

    if n < cfg.max_gaussians {
        let mut born = Vec::new();
        for i in 0..n {
            if stats.mean_grad(i) <= cfg.densify_grad_threshold {
                continue;
            }
            let max_scale = cloud.max_scale(i);
            let parent = cloud.get(i);
            if max_scale <= split_threshold {
                let g = stats.mean_grad_accum[i];
                let gn = linalg::norm(g);
                let mut child = parent.clone();
                if gn > 0.0 {
                    child.mean = linalg::add(child.mean, linalg::scale(g, -0.5 * max_scale / gn));
                }
                born.push(child);
                report.cloned += 1;
            } else {
                let r = linalg::quat_to_mat(parent.rotation);
                let s = parent.log_scale.map(f64::exp);
                let shrink = cfg.split_factor.ln();
                for _ in 0..cfg.split_children {
                    let z: Vec3 = [
                        rng.sample::<f64, _>(StandardNormal) * s[0],
                        rng.sample::<f64, _>(StandardNormal) * s[1],
                        rng.sample::<f64, _>(StandardNormal) * s[2],
                    ];
                    let mut child = parent.clone();
                    child.mean = linalg::add(parent.mean, linalg::mat_vec(&r, z));
                    child.log_scale = parent.log_scale.map(|l| l - shrink);
                    born.push(child);
                }
                keep[i] = false;
                report.split += 1;
            }
        }
        let added = born.len();
        for g in born {
            cloud.push(g);
        }
        adam.push_zeros(added);
        keep.extend(std::iter::repeat(true).take(added));
    }

    let prune_scale = cfg.prune_scale_fraction * extent;
    for i in 0..cloud.len() {
        if keep[i] && (cloud.opacity(i) < cfg.prune_opacity || cloud.max_scale(i) > prune_scale) {
            keep[i] = false;
            report.pruned += 1;
        }
    }
    cloud.retain_mask(&keep);
    adam.retain_mask(&keep);
    *stats = DensifyStats::zeros(cloud.len());
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(report)
}

/// Clamps every opacity to at most `cfg.opacity_reset_value` and clears the
/// opacity moments.
pub fn reset_opacity(cloud: &mut GaussianCloud, adam: &mut Adam, cfg: &TrainConfig) {
    let cap = linalg::logit(cfg.opacity_reset_value);
    for l in &mut cloud.opacity_logits {
        *l = l.min(cap);
    }
    adam.opacity.reset();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Gaussian;
    use crate::train::adam::AdamParams;
    use rand::SeedableRng;

    fn setup(gs: Vec<Gaussian>) -> (GaussianCloud, Adam, DensifyStats) {
        let n = gs.len();
        (
            GaussianCloud::from_gaussians(gs, 0),
            Adam::new(n, AdamParams::default()),
            DensifyStats::zeros(n),
        )
    }

    fn rng() -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(1)
    }

    #[test]
    fn quiet_cloud_unchanged() {
        let (mut c, mut a, mut s) = setup(vec![Gaussian::isotropic([0.0; 3], 0.005, 0.5, [0.5; 3])]);
        s.grad_accum[0] = 1e-5;
        s.grad_count[0] = 1;
        let before = c.clone();
        let r = densify_and_prune(&mut c, &mut a, &mut s, &TrainConfig::default(), 1.0, &mut rng()).unwrap();
        assert_eq!(r, DensifyReport::default());
        assert_eq!(c, before);
    }

    #[test]
    fn small_high_gradient_gaussian_is_cloned() {
        let cfg = TrainConfig::default();
        let (mut c, mut a, mut s) = setup(vec![Gaussian::isotropic([0.0; 3], 0.005, 0.5, [0.5; 3])]);
        s.grad_accum[0] = 10.0 * cfg.densify_grad_threshold;
        s.grad_count[0] = 1;
        s.mean_grad_accum[0] = [1.0, 0.0, 0.0];
        a.means.m[0] = [0.3; 3];
        let r = densify_and_prune(&mut c, &mut a, &mut s, &cfg, 1.0, &mut rng()).unwrap();
        assert_eq!((r.cloned, c.len(), a.len(), s.len()), (1, 2, 2, 2));
        assert_eq!(a.means.m[1], [0.0; 3]);
        assert_eq!(a.means.m[0], [0.3; 3]);
        assert!(c.means[1][0] < 0.0);
        assert_eq!(c.log_scales[1], c.log_scales[0]);
    }

    #[test]
    fn large_high_gradient_gaussian_is_split() {
        let cfg = TrainConfig::default();
        let (mut c, mut a, mut s) = setup(vec![Gaussian::isotropic([0.0; 3], 0.05, 0.5, [0.5; 3])]);
        s.grad_accum[0] = 10.0 * cfg.densify_grad_threshold;
        s.grad_count[0] = 1;
        let r = densify_and_prune(&mut c, &mut a, &mut s, &cfg, 1.0, &mut rng()).unwrap();
        assert_eq!((r.split, c.len(), a.len()), (1, 2, 2));
        for i in 0..2 {
            assert!((c.max_scale(i) - 0.05 / 1.6).abs() < 1e-12);
            assert_ne!(c.means[i], [0.0; 3]);
        }
    }

    #[test]
    fn transparent_and_oversized_are_pruned() {
        let (mut c, mut a, mut s) = setup(vec![
            Gaussian::isotropic([0.0; 3], 0.01, 0.001, [0.5; 3]),
            Gaussian::isotropic([0.0; 3], 0.2, 0.5, [0.5; 3]),
            Gaussian::isotropic([0.0; 3], 0.01, 0.5, [0.5; 3]),
        ]);
        let r = densify_and_prune(&mut c, &mut a, &mut s, &TrainConfig::default(), 1.0, &mut rng()).unwrap();
        assert_eq!((r.pruned, c.len(), a.len(), s.len()), (2, 1, 1, 1));
        assert!((c.max_scale(0) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn pruning_everything_is_an_error() {
        let (mut c, mut a, mut s) = setup(vec![Gaussian::isotropic([0.0; 3], 0.01, 0.001, [0.5; 3])]);
        let r = densify_and_prune(&mut c, &mut a, &mut s, &TrainConfig::default(), 1.0, &mut rng());
        assert!(matches!(r, Err(Error::EmptyCloud)));
    }

    #[test]
    fn opacity_reset_clamps() {
        let (mut c, mut a, _) = setup(vec![
            Gaussian::isotropic([0.0; 3], 0.01, 0.9, [0.5; 3]),
            Gaussian::isotropic([0.0; 3], 0.01, 0.005, [0.5; 3]),
        ]);
        a.opacity.m[0] = [0.4];
        reset_opacity(&mut c, &mut a, &TrainConfig::default());
        assert!((c.opacity(0) - 0.01).abs() < 1e-12);
        assert!((c.opacity(1) - 0.005).abs() < 1e-12);
        assert_eq!(a.opacity.m[0], [0.0]);
    }
}
