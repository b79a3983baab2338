//! Windowed SSIM with an 11×11 Gaussian window (σ = 1.5), K₁ = 0.01,
//! K₂ = 0.03, dynamic range 1. Only fully covered window positions are used
//! ("valid" filtering). Each RGB channel is scored separately and the three
//! scores are averaged.
//!
//! The same code path serves the metric and the training loss, which also
//! needs the analytic gradient with respect to the first image.

use crate::error::{Error, Result};
use crate::image::ImageRGB;

pub const WINDOW: usize = 11;
pub const SIGMA: f64 = 1.5;
pub const C1: f64 = 0.01 * 0.01;
pub const C2: f64 = 0.03 * 0.03;

/// Normalized 1D Gaussian taps.
pub fn window_taps() -> [f64; WINDOW] {
    let mut w = [0.0; WINDOW];
    let half = (WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-(d * d) / (2.0 * SIGMA * SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.map(|v| v / s)
}

/// Separable valid filter: `(w, h)` → `(w - 10, h - 10)`.
fn filter_valid(src: &[f64], w: usize, h: usize, taps: &[f64; WINDOW]) -> Vec<f64> {
    let ow = w - WINDOW + 1;
    let oh = h - WINDOW + 1;
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            let mut acc = 0.0;
            for k in 0..WINDOW {
                acc += taps[k] * row[x + k];
            }
            horiz[y * ow + x] = acc;
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for k in 0..WINDOW {
            let t = taps[k];
            let src_row = &horiz[(y + k) * ow..(y + k + 1) * ow];
            let dst = &mut out[y * ow..(y + 1) * ow];
            for x in 0..ow {
                dst[x] += t * src_row[x];
            }
        }
    }
    out
}

/// Adjoint of [`filter_valid`]: `(w - 10, h - 10)` → `(w, h)`.
fn filter_valid_adjoint(src: &[f64], w: usize, h: usize, taps: &[f64; WINDOW]) -> Vec<f64> {
    let ow = w - WINDOW + 1;
    let oh = h - WINDOW + 1;
    let mut vert = vec![0.0; ow * h];
    for y in 0..oh {
        let src_row = &src[y * ow..(y + 1) * ow];
        for k in 0..WINDOW {
            let t = taps[k];
            let dst = &mut vert[(y + k) * ow..(y + k + 1) * ow];
            for x in 0..ow {
                dst[x] += t * src_row[x];
            }
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let row = &vert[y * ow..(y + 1) * ow];
        let dst = &mut out[y * w..(y + 1) * w];
        for x in 0..ow {
            let v = row[x];
            for k in 0..WINDOW {
                dst[x + k] += taps[k] * v;
            }
        }
    }
    out
}

fn channel(img: &ImageRGB, c: usize) -> Vec<f64> {
    img.data().iter().skip(c).step_by(3).copied().collect()
}

/// Mean SSIM of one channel plane, and optionally its gradient with respect
/// to `x`.
fn ssim_plane(x: &[f64], y: &[f64], w: usize, h: usize, want_grad: bool) -> (f64, Option<Vec<f64>>) {
    let taps = window_taps();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let mu_x = filter_valid(x, w, h, &taps);
    let mu_y = filter_valid(y, w, h, &taps);
    let e_xx = filter_valid(&xx, w, h, &taps);
    let e_yy = filter_valid(&yy, w, h, &taps);
    let e_xy = filter_valid(&xy, w, h, &taps);
    let n = mu_x.len();
    let inv_n = 1.0 / n as f64;

    let mut sum = 0.0;
    let (mut d_mu, mut d_exx, mut d_exy) = if want_grad {
        (vec![0.0; n], vec![0.0; n], vec![0.0; n])
    } else {
        (Vec::new(), Vec::new(), Vec::new())
    };
    for i in 0..n {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let var_x = e_xx[i] - mx * mx;
        let var_y = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        let a1 = 2.0 * mx * my + C1;
        let a2 = 2.0 * cov + C2;
        let b1 = mx * mx + my * my + C1;
        let b2 = var_x + var_y + C2;
        let s = (a1 * a2) / (b1 * b2);
        sum += s;
        if want_grad {
            d_mu[i] = inv_n * s * (2.0 * my / a1 - 2.0 * my / a2 - 2.0 * mx / b1 + 2.0 * mx / b2);
            d_exx[i] = -inv_n * s / b2;
            d_exy[i] = inv_n * s * 2.0 / a2;
        }
    }
    let mean = sum * inv_n;
    if !want_grad {
        return (mean, None);
    }
    let g_mu = filter_valid_adjoint(&d_mu, w, h, &taps);
    let g_xx = filter_valid_adjoint(&d_exx, w, h, &taps);
    let g_xy = filter_valid_adjoint(&d_exy, w, h, &taps);
    let grad = (0..w * h)
        .map(|p| g_mu[p] + 2.0 * x[p] * g_xx[p] + y[p] * g_xy[p])
        .collect();
    (mean, Some(grad))
}

fn check(a: &ImageRGB, b: &ImageRGB) -> Result<()> {
    a.same_shape(b)?;
    let side = a.width().min(a.height());
    if side < WINDOW {
        return Err(Error::TooSmall(side));
    }
    Ok(())
}

/// Channel-averaged mean SSIM.
pub fn ssim(a: &ImageRGB, b: &ImageRGB) -> Result<f64> {
    check(a, b)?;
    let (w, h) = (a.width(), a.height());
    let total: f64 = (0..3)
        .map(|c| ssim_plane(&channel(a, c), &channel(b, c), w, h, false).0)
        .sum();
    Ok(total / 3.0)
}

/// SSIM and its gradient with respect to `a`, in `a`'s interleaved layout.
pub fn ssim_with_grad(a: &ImageRGB, b: &ImageRGB) -> Result<(f64, Vec<f64>)> {
    check(a, b)?;
    let (w, h) = (a.width(), a.height());
    let mut grad = vec![0.0; w * h * 3];
    let mut total = 0.0;
    for c in 0..3 {
        let (s, g) = ssim_plane(&channel(a, c), &channel(b, c), w, h, true);
        total += s;
        for (p, v) in g.unwrap().into_iter().enumerate() {
            grad[p * 3 + c] = v / 3.0;
        }
    }
    Ok((total / 3.0, grad))
}

/// Structural dissimilarity `(1 - SSIM) / 2`.
pub fn dssim(a: &ImageRGB, b: &ImageRGB) -> Result<f64> {
    Ok((1.0 - ssim(a, b)?) / 2.0)
}
