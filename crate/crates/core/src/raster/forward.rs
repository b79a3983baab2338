//! Front-to-back alpha compositing over tile lists.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::Result;
use crate::image::{ImageRGB, Rgb};
use crate::raster::bins::TileBins;
use crate::raster::project::SplatProjection;
use crate::raster::RasterConfig;

/// Rendered color plus accumulated opacity per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedView {
    pub image: ImageRGB,
    /// Row-major, `1 - final transmittance`.
    pub alpha: Vec<f64>,
}

impl RenderedView {
    /// Little-endian `f32` planes, each row-major: R, G, B, then alpha.
    pub fn write_raw(&self, path: &Path) -> Result<()> {
        let (w, h) = (self.image.width(), self.image.height());
        let data = self.image.data();
        let mut out = Vec::with_capacity(w * h * 16);
        for c in 0..3 {
            for p in 0..w * h {
                out.extend_from_slice(&(data[p * 3 + c] as f32).to_le_bytes());
            }
        }
        for &a in &self.alpha {
            out.extend_from_slice(&(a as f32).to_le_bytes());
        }
        std::fs::File::create(path)?.write_all(&out)?;
        Ok(())
    }
}

/// What the backward pass needs from the forward pass.
#[derive(Debug, Clone)]
pub struct BlendState {
    pub final_transmittance: Vec<f64>,
    /// One past the tile-list position of the last splat composited at
    /// each pixel.
    pub last_contributor: Vec<u32>,
}

/// Splat opacity at pixel center `(px, py)` after the cap, or `None` when
/// below the skip threshold. Also returns the unnormalized Gaussian weight.
#[inline]
pub(crate) fn splat_alpha(s: &SplatProjection, px: f64, py: f64, cfg: &RasterConfig) -> Option<(f64, f64)> {
    let dx = px - s.mean[0];
    let dy = py - s.mean[1];
    let power = -0.5 * (s.conic[0] * dx * dx + 2.0 * s.conic[1] * dx * dy + s.conic[2] * dy * dy);
    if power > 0.0 {
        return None;
    }
    let g = power.exp();
    let a = (s.opacity * g).min(cfg.alpha_cap);
    if a < cfg.alpha_min {
        None
    } else {
        Some((a, g))
    }
}

struct TileOut {
    color: Vec<f64>,
    t_final: Vec<f64>,
    last: Vec<u32>,
}

fn blend_tile(
    bins: &TileBins,
    tile: usize,
    projections: &[SplatProjection],
    background: Rgb,
    cfg: &RasterConfig,
) -> TileOut {
    let [x0, y0, x1, y1] = bins.tile_rect(tile);
    let n = (x1 - x0) * (y1 - y0);
    let mut out = TileOut {
        color: Vec::with_capacity(n * 3),
        t_final: Vec::with_capacity(n),
        last: Vec::with_capacity(n),
    };
    let list = &bins.lists[tile];
    for y in y0..y1 {
        for x in x0..x1 {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let mut t = 1.0;
            let mut c = [0.0; 3];
            let mut last = 0u32;
            for (pos, &id) in list.iter().enumerate() {
                let s = &projections[id as usize];
                if !s.covers(x as i32, y as i32) {
                    continue;
                }
                let Some((a, _)) = splat_alpha(s, px, py, cfg) else {
                    continue;
                };
                let w = a * t;
                for ch in 0..3 {
                    c[ch] += s.color[ch] * w;
                }
                t *= 1.0 - a;
                last = pos as u32 + 1;
                if t < cfg.transmittance_min {
                    break;
                }
            }
            for ch in 0..3 {
                out.color.push((c[ch] + t * background[ch]).clamp(0.0, 1.0));
            }
            out.t_final.push(t);
            out.last.push(last);
        }
    }
    out
}

pub fn blend_forward(
    bins: &TileBins,
    projections: &[SplatProjection],
    background: Rgb,
    cfg: &RasterConfig,
) -> (RenderedView, BlendState) {
    let (w, h) = (bins.width, bins.height);
    let tiles: Vec<TileOut> = (0..bins.lists.len())
        .into_par_iter()
        .map(|t| blend_tile(bins, t, projections, background, cfg))
        .collect();
    let mut color = vec![0.0; w * h * 3];
    let mut t_final = vec![1.0; w * h];
    let mut last = vec![0u32; w * h];
    for (tile, out) in tiles.into_iter().enumerate() {
        let [x0, y0, x1, y1] = bins.tile_rect(tile);
        let tw = x1 - x0;
        for y in y0..y1 {
            for x in x0..x1 {
                let local = (y - y0) * tw + (x - x0);
                let p = y * w + x;
                color[p * 3..p * 3 + 3].copy_from_slice(&out.color[local * 3..local * 3 + 3]);
                t_final[p] = out.t_final[local];
                last[p] = out.last[local];
            }
        }
    }
    let alpha = t_final.iter().map(|t| 1.0 - t).collect();
    (
        RenderedView {
            image: ImageRGB::from_raw(w, h, color),
            alpha,
        },
        BlendState {
            final_transmittance: t_final,
            last_contributor: last,
        },
    )
}
