//! Photometric training loss `(1 - λ)·L1 + λ·D-SSIM`.

use crate::error::Result;
use crate::image::ImageRGB;
use crate::metrics::ssim_with_grad;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub l1: f64,
    pub dssim: f64,
    pub total: f64,
}

/// Combines a mean absolute error and an SSIM score.
pub fn combine(l1: f64, ssim: f64, lambda: f64) -> LossValue {
    let dssim = (1.0 - ssim) / 2.0;
    LossValue {
        l1,
        dssim,
        total: (1.0 - lambda) * l1 + lambda * dssim,
    }
}

/// Loss value and its gradient with respect to every value of `render`.
pub fn loss(render: &ImageRGB, truth: &ImageRGB, lambda: f64) -> Result<(LossValue, Vec<f64>)> {
    let (s, d_ssim) = ssim_with_grad(render, truth)?;
    let r = render.data();
    let t = truth.data();
    let n = r.len() as f64;
    let mut l1 = 0.0;
    let w_l1 = (1.0 - lambda) / n;
    let w_ssim = -lambda / 2.0;
    let grad = r
        .iter()
        .zip(t)
        .zip(&d_ssim)
        .map(|((a, b), ds)| {
            let d = a - b;
            l1 += d.abs();
            let sign = if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            };
            w_l1 * sign + w_ssim * ds
        })
        .collect();
    Ok((combine(l1 / n, s, lambda), grad))
}
