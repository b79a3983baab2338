//! The learnable Gaussian scene.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat3, Quat, Vec3};
use crate::scene::sh::{self, MAX_COEFFS};

/// Number of SH values stored per Gaussian (16 coefficients × RGB).
pub const SH_LEN: usize = MAX_COEFFS * 3;

/// Structure-of-arrays Gaussian cloud.
///
/// Covariances are parameterized as `Σ = R·diag(exp(2·log_scale))·Rᵀ` with
/// `R` from a unit quaternion, so every stored Gaussian has a
/// positive-definite covariance. Opacity is `sigmoid(opacity_logit)`.
/// SH coefficients are stored coefficient-major (`sh[i][j * 3 + channel]`).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCloud {
    pub means: Vec<Vec3>,
    pub log_scales: Vec<Vec3>,
    pub rotations: Vec<Quat>,
    pub opacity_logits: Vec<f64>,
    pub sh: Vec<[f64; SH_LEN]>,
    /// Highest SH band currently used for rendering.
    pub sh_degree: usize,
}

/// One Gaussian's parameters, used for pushing and inspecting.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub mean: Vec3,
    pub log_scale: Vec3,
    pub rotation: Quat,
    pub opacity_logit: f64,
    pub sh: [f64; SH_LEN],
}

impl Gaussian {
    /// Isotropic Gaussian with a direction-independent base color.
    pub fn isotropic(mean: Vec3, sigma: f64, opacity: f64, color: [f64; 3]) -> Self {
        let mut sh = [0.0; SH_LEN];
        for c in 0..3 {
            sh[c] = sh::rgb_to_dc(color[c]);
        }
        Self {
            mean,
            log_scale: [sigma.ln(); 3],
            rotation: linalg::QUAT_IDENTITY,
            opacity_logit: linalg::logit(opacity),
            sh,
        }
    }

    pub fn covariance(&self) -> Mat3 {
        covariance_from_params(self.log_scale, self.rotation)
    }
}

/// `Σ = R·diag(exp(2·log_scale))·Rᵀ`; the quaternion is normalized first.
pub fn covariance_from_params(log_scale: Vec3, rotation: Quat) -> Mat3 {
    let r = linalg::quat_to_mat(linalg::quat_normalize(rotation));
    let var = log_scale.map(|s| (2.0 * s).exp());
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = r[i][0] * var[0] * r[j][0] + r[i][1] * var[1] * r[j][1] + r[i][2] * var[2] * r[j][2];
        }
    }
    out
}

/// Condition number beyond which a covariance counts as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Normalized trivariate Gaussian density
/// `exp(-½(x-p)ᵀΣ⁻¹(x-p)) / ((2π)^{3/2}·√|Σ|)`.
///
/// The rasterizer does not use this normalization; splat weights are the
/// bare exponential scaled by opacity.
pub fn density_at(mean: Vec3, cov: &Mat3, x: Vec3) -> Result<f64> {
    let ev = linalg::sym_eigenvalues(cov);
    if ev[0] <= 0.0 || !ev[2].is_finite() {
        return Err(Error::SingularCovariance(f64::INFINITY));
    }
    let cond = ev[2] / ev[0];
    if cond > MAX_CONDITION {
        return Err(Error::SingularCovariance(cond));
    }
    let inv = linalg::inverse3(cov).ok_or(Error::SingularCovariance(f64::INFINITY))?;
    let d = linalg::sub(x, mean);
    let m = linalg::dot(d, linalg::mat_vec(&inv, d));
    let det = linalg::det3(cov);
    let norm = (2.0 * std::f64::consts::PI).powf(1.5) * det.sqrt();
    Ok((-0.5 * m).exp() / norm)
}

impl GaussianCloud {
    pub fn new() -> Self {
        Self {
            means: Vec::new(),
            log_scales: Vec::new(),
            rotations: Vec::new(),
            opacity_logits: Vec::new(),
            sh: Vec::new(),
            sh_degree: 0,
        }
    }

    pub fn from_gaussians(gaussians: impl IntoIterator<Item = Gaussian>, sh_degree: usize) -> Self {
        let mut cloud = Self::new();
        cloud.sh_degree = sh_degree;
        for g in gaussians {
            cloud.push(g);
        }
        cloud
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn push(&mut self, g: Gaussian) {
        self.means.push(g.mean);
        self.log_scales.push(g.log_scale);
        self.rotations.push(g.rotation);
        self.opacity_logits.push(g.opacity_logit);
        self.sh.push(g.sh);
    }

    pub fn get(&self, i: usize) -> Gaussian {
        Gaussian {
            mean: self.means[i],
            log_scale: self.log_scales[i],
            rotation: self.rotations[i],
            opacity_logit: self.opacity_logits[i],
            sh: self.sh[i],
        }
    }

    pub fn opacity(&self, i: usize) -> f64 {
        linalg::sigmoid(self.opacity_logits[i])
    }

    pub fn covariance(&self, i: usize) -> Mat3 {
        covariance_from_params(self.log_scales[i], self.rotations[i])
    }

    /// Largest per-axis standard deviation.
    pub fn max_scale(&self, i: usize) -> f64 {
        let s = self.log_scales[i];
        s[0].max(s[1]).max(s[2]).exp()
    }

    /// Keeps the Gaussians whose flag is `true`.
    pub fn retain_mask(&mut self, keep: &[bool]) {
        assert_eq!(keep.len(), self.len());
        fn filter<T: Copy>(v: &mut Vec<T>, keep: &[bool]) {
            let mut it = keep.iter();
            v.retain(|_| *it.next().unwrap());
        }
        filter(&mut self.means, keep);
        filter(&mut self.log_scales, keep);
        filter(&mut self.rotations, keep);
        filter(&mut self.opacity_logits, keep);
        filter(&mut self.sh, keep);
    }

    /// Re-normalizes every rotation quaternion.
    pub fn normalize_rotations(&mut self) {
        for q in &mut self.rotations {
            *q = linalg::quat_normalize(*q);
        }
    }

    /// Checks finite parameters, unit quaternions and opacities strictly
    /// inside `(0, 1)`.
    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyCloud);
        }
        for i in 0..self.len() {
            let finite = self.means[i].iter().all(|v| v.is_finite())
                && self.log_scales[i].iter().all(|v| v.is_finite())
                && self.rotations[i].iter().all(|v| v.is_finite())
                && self.opacity_logits[i].is_finite()
                && self.sh[i].iter().all(|v| v.is_finite());
            if !finite {
                return Err(Error::NonFiniteGradient(format!(
                    "Gaussian {i} has non-finite parameters"
                )));
            }
            if (linalg::quat_norm(self.rotations[i]) - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidConfig(format!(
                    "Gaussian {i} rotation is not unit norm"
                )));
            }
            let a = self.opacity(i);
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "Gaussian {i} opacity {a} outside (0, 1)"
                )));
            }
        }
        Ok(())
    }

    /// Radius of the bounding sphere of the means about their centroid.
    pub fn extent(&self) -> f64 {
        bounding_radius(&self.means)
    }
}

impl Default for GaussianCloud {
    fn default() -> Self {
        Self::new()
    }
}

/// Radius of the sphere centered at the centroid enclosing all points.
pub fn bounding_radius(points: &[Vec3]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let n = points.len() as f64;
    let c = points
        .iter()
        .fold([0.0; 3], |acc, p| linalg::add(acc, *p))
        .map(|v| v / n);
    points
        .iter()
        .map(|p| linalg::norm(linalg::sub(*p, c)))
        .fold(0.0, f64::max)
}
