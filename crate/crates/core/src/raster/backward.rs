//! Analytic gradients of the rendered image with respect to every learnable
//! Gaussian parameter.
//!
//! The pass runs in two stages. Per tile, pixels are walked back-to-front to
//! produce gradients of the screen-space splat parameters (mean, conic,
//! color, opacity). Tile buffers are merged in tile order, which keeps the
//! result bit-identical for any thread count. Then, per Gaussian, those
//! gradients are pushed through the projection, covariance factorization,
//! quaternion normalization, sigmoid and SH evaluation.

use rayon::prelude::*;

use crate::camera::PinholeCamera;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat3, Vec3};
use crate::raster::bins::TileBins;
use crate::raster::forward::{splat_alpha, BlendState};
use crate::raster::project::{geometry, view_dir, SplatProjection};
use crate::raster::RasterConfig;
use crate::scene::sh::{self, ShBasis, MAX_COEFFS};
use crate::scene::{GaussianCloud, SH_LEN};

/// Gradients laid out like [`GaussianCloud`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub means: Vec<Vec3>,
    pub log_scales: Vec<Vec3>,
    pub rotations: Vec<[f64; 4]>,
    pub opacity_logits: Vec<f64>,
    pub sh: Vec<[f64; SH_LEN]>,
    /// Gradient of the loss with respect to each splat's pixel-space mean.
    pub mean2d: Vec<[f64; 2]>,
    /// Whether the Gaussian survived culling in this view.
    pub visible: Vec<bool>,
}

impl Gradients {
    pub fn zeros(n: usize) -> Self {
        Self {
            means: vec![[0.0; 3]; n],
            log_scales: vec![[0.0; 3]; n],
            rotations: vec![[0.0; 4]; n],
            opacity_logits: vec![0.0; n],
            sh: vec![[0.0; SH_LEN]; n],
            mean2d: vec![[0.0; 2]; n],
            visible: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    /// Adds another view's gradients.
    pub fn accumulate(&mut self, other: &Gradients) {
        assert_eq!(self.len(), other.len());
        for i in 0..self.len() {
            for k in 0..3 {
                self.means[i][k] += other.means[i][k];
                self.log_scales[i][k] += other.log_scales[i][k];
            }
            for k in 0..4 {
                self.rotations[i][k] += other.rotations[i][k];
            }
            self.opacity_logits[i] += other.opacity_logits[i];
            for k in 0..SH_LEN {
                self.sh[i][k] += other.sh[i][k];
            }
            for k in 0..2 {
                self.mean2d[i][k] += other.mean2d[i][k];
            }
            self.visible[i] |= other.visible[i];
        }
    }

    fn check_finite(&self) -> Result<()> {
        for i in 0..self.len() {
            let ok = self.means[i].iter().all(|v| v.is_finite())
                && self.log_scales[i].iter().all(|v| v.is_finite())
                && self.rotations[i].iter().all(|v| v.is_finite())
                && self.opacity_logits[i].is_finite()
                && self.sh[i].iter().all(|v| v.is_finite());
            if !ok {
                return Err(Error::NonFiniteGradient(format!(
                    "Gaussian {i}: mean {:?} log_scale {:?} rotation {:?} opacity {}",
                    self.means[i], self.log_scales[i], self.rotations[i], self.opacity_logits[i]
                )));
            }
        }
        Ok(())
    }
}

/// Screen-space gradients of one splat:
/// `[d_mean_x, d_mean_y, d_conic_a, d_conic_b, d_conic_c, d_r, d_g, d_b, d_opacity]`.
type SplatGrad = [f64; 9];

fn backward_tile(
    bins: &TileBins,
    tile: usize,
    projections: &[SplatProjection],
    state: &BlendState,
    d_pixels: &[f64],
    background: [f64; 3],
    cfg: &RasterConfig,
) -> Vec<SplatGrad> {
    let list = &bins.lists[tile];
    let mut grads = vec![[0.0; 9]; list.len()];
    let [x0, y0, x1, y1] = bins.tile_rect(tile);
    let w = bins.width;
    for y in y0..y1 {
        for x in x0..x1 {
            let p = y * w + x;
            let last = state.last_contributor[p] as usize;
            if last == 0 {
                continue;
            }
            let dc = [d_pixels[p * 3], d_pixels[p * 3 + 1], d_pixels[p * 3 + 2]];
            if dc == [0.0; 3] {
                continue;
            }
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let mut t = state.final_transmittance[p];
            // color composited behind the current splat, background included
            let mut behind = [
                t * background[0],
                t * background[1],
                t * background[2],
            ];
            for pos in (0..last).rev() {
                let s = &projections[list[pos] as usize];
                if !s.covers(x as i32, y as i32) {
                    continue;
                }
                let Some((a, g)) = splat_alpha(s, px, py, cfg) else {
                    continue;
                };
                t /= 1.0 - a;
                let wgt = a * t;
                let gr = &mut grads[pos];
                let mut d_a = 0.0;
                for ch in 0..3 {
                    gr[5 + ch] += wgt * dc[ch];
                    d_a += dc[ch] * (s.color[ch] * t - behind[ch] / (1.0 - a));
                    behind[ch] += s.color[ch] * wgt;
                }
                if s.opacity * g >= cfg.alpha_cap {
                    continue;
                }
                gr[8] += d_a * g;
                let d_power = d_a * s.opacity * g;
                let dx = px - s.mean[0];
                let dy = py - s.mean[1];
                let [ca, cb, cc] = s.conic;
                gr[0] += d_power * (ca * dx + cb * dy);
                gr[1] += d_power * (cb * dx + cc * dy);
                gr[2] += d_power * (-0.5 * dx * dx);
                gr[3] += d_power * (-dx * dy);
                gr[4] += d_power * (-0.5 * dy * dy);
            }
        }
    }
    grads
}

/// d(R(q))/dq for a unit quaternion, contracted with `d_rot`.
fn rotation_grad(q: [f64; 4], d_rot: &Mat3) -> [f64; 4] {
    let [w, x, y, z] = q;
    let g = d_rot;
    let dw = 2.0
        * (-z * g[0][1] + y * g[0][2] + z * g[1][0] - x * g[1][2] - y * g[2][0] + x * g[2][1]);
    let dx = 2.0
        * (y * g[0][1] + z * g[0][2] + y * g[1][0] - 2.0 * x * g[1][1] - w * g[1][2]
            + z * g[2][0]
            + w * g[2][1]
            - 2.0 * x * g[2][2]);
    let dy = 2.0
        * (-2.0 * y * g[0][0] + x * g[0][1] + w * g[0][2] + x * g[1][0] + z * g[1][2]
            - w * g[2][0]
            + z * g[2][1]
            - 2.0 * y * g[2][2]);
    let dz = 2.0
        * (-2.0 * z * g[0][0] - w * g[0][1] + x * g[0][2] + w * g[1][0] - 2.0 * z * g[1][1]
            + y * g[1][2]
            + x * g[2][0]
            + y * g[2][1]);
    [dw, dx, dy, dz]
}

struct GaussianGrad {
    mean: Vec3,
    log_scale: Vec3,
    rotation: [f64; 4],
    opacity_logit: f64,
    sh: [f64; SH_LEN],
}

/// Chains screen-space gradients of splat `s` back to its 3D parameters.
fn chain_to_gaussian(
    cloud: &GaussianCloud,
    s: &SplatProjection,
    g: &SplatGrad,
    cam: &PinholeCamera,
    w: &Mat3,
    cam_center: Vec3,
    cfg: &RasterConfig,
) -> GaussianGrad {
    let i = s.index;
    let k = &cam.intrinsics;
    let geo = geometry(cloud, i, cam, w, cfg.dilation);

    // opacity through the sigmoid
    let alpha = s.opacity;
    let opacity_logit = g[8] * alpha * (1.0 - alpha);

    // color through the clamp and SH basis
    let (dir, dir_len) = view_dir(cloud.means[i], cam_center);
    let basis = ShBasis::eval(cloud.sh_degree, dir);
    let raw = sh::sh_color_raw(&cloud.sh[i], &basis);
    let mut d_raw = [0.0; 3];
    for ch in 0..3 {
        if raw[ch] >= 0.0 && raw[ch] <= 1.0 {
            d_raw[ch] = g[5 + ch];
        }
    }
    let n_coeffs = sh::coeff_count(cloud.sh_degree);
    let mut d_sh = [0.0; SH_LEN];
    for j in 0..n_coeffs {
        for ch in 0..3 {
            d_sh[j * 3 + ch] = d_raw[ch] * basis.values[j];
        }
    }
    let mut d_mean = [0.0; 3];
    if cloud.sh_degree > 0 {
        let grad_basis = ShBasis::gradient(cloud.sh_degree, dir);
        let mut d_dir = [0.0; 3];
        for (j, gb) in grad_basis.iter().enumerate().take(n_coeffs.min(MAX_COEFFS)).skip(1) {
            let coef_dot: f64 = (0..3).map(|ch| d_raw[ch] * cloud.sh[i][j * 3 + ch]).sum();
            for a in 0..3 {
                d_dir[a] += coef_dot * gb[a];
            }
        }
        let along = linalg::dot(dir, d_dir);
        for a in 0..3 {
            d_mean[a] += (d_dir[a] - dir[a] * along) / dir_len;
        }
    }

    // conic -> screen covariance: dΣ₂ = -K·G·K with G symmetric
    let [ca, cb, cc] = s.conic;
    let gk = [[g[2], 0.5 * g[3]], [0.5 * g[3], g[4]]];
    let kk = [[ca, cb], [cb, cc]];
    let mut kg = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            kg[r][c] = kk[r][0] * gk[0][c] + kk[r][1] * gk[1][c];
        }
    }
    let mut d_cov2 = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            d_cov2[r][c] = -(kg[r][0] * kk[0][c] + kg[r][1] * kk[1][c]);
        }
    }

    // Σ₂ = T Σ Tᵀ (T = J·W): dΣ = Tᵀ dΣ₂ T, dT = 2 dΣ₂ T Σ
    let jw = &geo.jw;
    let mut d_cov3 = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            let mut acc = 0.0;
            for r in 0..2 {
                for c in 0..2 {
                    acc += jw[r][a] * d_cov2[r][c] * jw[c][b];
                }
            }
            d_cov3[a][b] = acc;
        }
    }
    let mut t_sigma = [[0.0; 3]; 2];
    for r in 0..2 {
        for c in 0..3 {
            t_sigma[r][c] = (0..3).map(|m| jw[r][m] * geo.cov3[m][c]).sum();
        }
    }
    let mut d_jw = [[0.0; 3]; 2];
    for r in 0..2 {
        for c in 0..3 {
            d_jw[r][c] = 2.0 * (d_cov2[r][0] * t_sigma[0][c] + d_cov2[r][1] * t_sigma[1][c]);
        }
    }
    // dJ = dT · Wᵀ
    let mut d_j = [[0.0; 3]; 2];
    for r in 0..2 {
        for c in 0..3 {
            d_j[r][c] = (0..3).map(|m| d_jw[r][m] * w[c][m]).sum();
        }
    }
    let [tx, ty, tz] = geo.t;
    let (fx, fy) = (k.fx, k.fy);
    let tz2 = tz * tz;
    let tz3 = tz2 * tz;
    let mut d_t = [0.0; 3];
    d_t[0] += d_j[0][2] * (-fx / tz2);
    d_t[1] += d_j[1][2] * (-fy / tz2);
    d_t[2] += d_j[0][0] * (-fx / tz2)
        + d_j[0][2] * (2.0 * fx * tx / tz3)
        + d_j[1][1] * (-fy / tz2)
        + d_j[1][2] * (2.0 * fy * ty / tz3);
    // screen mean
    d_t[0] += g[0] * fx / tz;
    d_t[1] += g[1] * fy / tz;
    d_t[2] += -g[0] * fx * tx / tz2 - g[1] * fy * ty / tz2;
    let d_world = linalg::mat_t_vec(w, d_t);
    for a in 0..3 {
        d_mean[a] += d_world[a];
    }

    // Σ = M Mᵀ with M = R·S: dM = 2 dΣ M
    let rot = &geo.rot;
    let sc = geo.scale;
    let mut d_m = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            d_m[a][b] = 2.0 * (0..3).map(|m| d_cov3[a][m] * rot[m][b] * sc[b]).sum::<f64>();
        }
    }
    let mut log_scale = [0.0; 3];
    let mut d_rot = [[0.0; 3]; 3];
    for b in 0..3 {
        let ds: f64 = (0..3).map(|a| d_m[a][b] * rot[a][b]).sum();
        log_scale[b] = ds * sc[b];
        for a in 0..3 {
            d_rot[a][b] = d_m[a][b] * sc[b];
        }
    }
    let q = cloud.rotations[i];
    let qn = linalg::quat_norm(q);
    let qhat = [q[0] / qn, q[1] / qn, q[2] / qn, q[3] / qn];
    let d_qhat = rotation_grad(qhat, &d_rot);
    let along: f64 = (0..4).map(|m| qhat[m] * d_qhat[m]).sum();
    let rotation = [0, 1, 2, 3].map(|m| (d_qhat[m] - qhat[m] * along) / qn);

    GaussianGrad {
        mean: d_mean,
        log_scale,
        rotation,
        opacity_logit,
        sh: d_sh,
    }
}

/// Backpropagates `d_pixels` (row-major RGB, same layout as the image)
/// through one rendered view.
#[allow(clippy::too_many_arguments)]
pub fn blend_backward(
    cloud: &GaussianCloud,
    cam: &PinholeCamera,
    projections: &[SplatProjection],
    bins: &TileBins,
    state: &BlendState,
    background: [f64; 3],
    d_pixels: &[f64],
    cfg: &RasterConfig,
) -> Result<Gradients> {
    if d_pixels.len() != bins.width * bins.height * 3 {
        return Err(Error::DimensionMismatch(format!(
            "pixel gradient has {} values, image has {}",
            d_pixels.len(),
            bins.width * bins.height * 3
        )));
    }
    if !(cfg.alpha_cap < 1.0) {
        return Err(Error::InvalidConfig(
            "backward pass needs alpha_cap < 1".into(),
        ));
    }
    let per_tile: Vec<Vec<SplatGrad>> = (0..bins.lists.len())
        .into_par_iter()
        .map(|t| backward_tile(bins, t, projections, state, d_pixels, background, cfg))
        .collect();
    // fixed-order merge
    let mut splat_grads = vec![[0.0; 9]; projections.len()];
    for (tile, grads) in per_tile.iter().enumerate() {
        for (pos, g) in grads.iter().enumerate() {
            let dst = &mut splat_grads[bins.lists[tile][pos] as usize];
            for k in 0..9 {
                dst[k] += g[k];
            }
        }
    }

    let w = cam.pose.rotation_matrix();
    let center = cam.center();
    let chained: Vec<GaussianGrad> = projections
        .par_iter()
        .zip(splat_grads.par_iter())
        .map(|(s, g)| chain_to_gaussian(cloud, s, g, cam, &w, center, cfg))
        .collect();

    let mut out = Gradients::zeros(cloud.len());
    for ((s, g), sg) in projections.iter().zip(chained).zip(&splat_grads) {
        let i = s.index;
        out.means[i] = g.mean;
        out.log_scales[i] = g.log_scale;
        out.rotations[i] = g.rotation;
        out.opacity_logits[i] = g.opacity_logit;
        out.sh[i] = g.sh;
        out.mean2d[i] = [sg[0], sg[1]];
        out.visible[i] = true;
    }
    out.check_finite()?;
    Ok(out)
}
