//! Perspective projection of 3D Gaussians to screen-space splats.

use rayon::prelude::*;

use crate::camera::PinholeCamera;
use crate::linalg::{self, Mat3, Vec3};
use crate::raster::RasterConfig;
use crate::scene::sh::{self, ShBasis};
use crate::scene::GaussianCloud;

/// Screen-space footprint of one visible Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplatProjection {
    pub index: usize,
    /// Pixel coordinates; pixel `(x, y)` has its center at `(x + 0.5, y + 0.5)`.
    pub mean: [f64; 2],
    /// Dilated screen covariance `[σxx, σxy, σyy]`.
    pub cov: [f64; 3],
    /// Inverse of `cov`, same layout.
    pub conic: [f64; 3],
    pub depth: f64,
    /// `radius_sigmas` standard deviations along the major axis, in pixels.
    pub radius: f64,
    /// Inclusive pixel bounds `[x0, y0, x1, y1]` of the square footprint,
    /// clipped to the image.
    pub bounds: [i32; 4],
    pub color: [f64; 3],
    pub opacity: f64,
}

impl SplatProjection {
    #[inline]
    pub fn covers(&self, x: i32, y: i32) -> bool {
        x >= self.bounds[0] && x <= self.bounds[2] && y >= self.bounds[1] && y <= self.bounds[3]
    }
}

/// Per-Gaussian intermediate values shared by the forward and backward
/// passes.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Geometry {
    /// View-space position.
    pub t: Vec3,
    pub rot: Mat3,
    pub scale: Vec3,
    pub cov3: Mat3,
    /// `J·W`, 2×3.
    pub jw: [[f64; 3]; 2],
    pub cov2: [f64; 3],
    pub mean2: [f64; 2],
}

pub(crate) fn geometry(
    cloud: &GaussianCloud,
    i: usize,
    cam: &PinholeCamera,
    w: &Mat3,
    dilation: f64,
) -> Geometry {
    let k = &cam.intrinsics;
    let t = linalg::add(linalg::mat_vec(w, cloud.means[i]), cam.pose.translation);
    let rot = linalg::quat_to_mat(linalg::quat_normalize(cloud.rotations[i]));
    let scale = cloud.log_scales[i].map(f64::exp);
    let mut cov3 = [[0.0; 3]; 3];
    for (a, row) in cov3.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            *cell = (0..3)
                .map(|m| rot[a][m] * scale[m] * scale[m] * rot[b][m])
                .sum();
        }
    }
    let (tx, ty, tz) = (t[0], t[1], t[2]);
    let j = [
        [k.fx / tz, 0.0, -k.fx * tx / (tz * tz)],
        [0.0, k.fy / tz, -k.fy * ty / (tz * tz)],
    ];
    let mut jw = [[0.0; 3]; 2];
    for r in 0..2 {
        for c in 0..3 {
            jw[r][c] = j[r][0] * w[0][c] + j[r][1] * w[1][c] + j[r][2] * w[2][c];
        }
    }
    // cov2 = JW Σ (JW)ᵀ
    let mut tmp = [[0.0; 3]; 2];
    for r in 0..2 {
        for c in 0..3 {
            tmp[r][c] = (0..3).map(|m| jw[r][m] * cov3[m][c]).sum();
        }
    }
    let entry = |r: usize, s: usize| -> f64 { (0..3).map(|m| tmp[r][m] * jw[s][m]).sum() };
    let cov2 = [entry(0, 0) + dilation, entry(0, 1), entry(1, 1) + dilation];
    let mean2 = [k.fx * tx / tz + k.cx, k.fy * ty / tz + k.cy];
    Geometry {
        t,
        rot,
        scale,
        cov3,
        jw,
        cov2,
        mean2,
    }
}

/// View direction from the camera center to a Gaussian mean, and the length
/// of the unnormalized vector.
#[inline]
pub(crate) fn view_dir(mean: Vec3, cam_center: Vec3) -> (Vec3, f64) {
    let v = linalg::sub(mean, cam_center);
    let n = linalg::norm(v);
    (linalg::scale(v, 1.0 / n), n)
}

/// Projects every Gaussian; culled ones (behind the near plane, degenerate,
/// or with a footprint entirely outside the image) are omitted. Output is
/// ordered by Gaussian index.
pub fn project(cloud: &GaussianCloud, cam: &PinholeCamera, cfg: &RasterConfig) -> Vec<SplatProjection> {
    let w = cam.pose.rotation_matrix();
    let center = cam.center();
    let (width, height) = (cam.width() as i32, cam.height() as i32);
    (0..cloud.len())
        .into_par_iter()
        .filter_map(|i| {
            let z = linalg::dot(w[2], cloud.means[i]) + cam.pose.translation[2];
            if !(z > cfg.near) {
                return None;
            }
            let g = geometry(cloud, i, cam, &w, cfg.dilation);
            let [a, b, c] = g.cov2;
            let det = a * c - b * b;
            if !(det > 0.0) {
                return None;
            }
            let mid = 0.5 * (a + c);
            let lambda_max = mid + (mid * mid - det).max(0.0).sqrt();
            let radius = cfg.radius_sigmas * lambda_max.sqrt();
            let [mx, my] = g.mean2;
            // pixel x is covered when |x + 0.5 - mx| <= radius
            let x0 = (mx - radius - 0.5).ceil();
            let x1 = (mx + radius - 0.5).floor();
            let y0 = (my - radius - 0.5).ceil();
            let y1 = (my + radius - 0.5).floor();
            if !(x1 >= 0.0 && y1 >= 0.0 && x0 < width as f64 && y0 < height as f64) || x0 > x1 || y0 > y1 {
                return None;
            }
            let bounds = [
                x0.max(0.0) as i32,
                y0.max(0.0) as i32,
                x1.min((width - 1) as f64) as i32,
                y1.min((height - 1) as f64) as i32,
            ];
            let (dir, _) = view_dir(cloud.means[i], center);
            let basis = ShBasis::eval(cloud.sh_degree, dir);
            let color = sh::sh_color_raw(&cloud.sh[i], &basis).map(|v| v.clamp(0.0, 1.0));
            Some(SplatProjection {
                index: i,
                mean: g.mean2,
                cov: g.cov2,
                conic: [c / det, -b / det, a / det],
                depth: z,
                radius,
                bounds,
                color,
                opacity: cloud.opacity(i),
            })
        })
        .collect()
}
