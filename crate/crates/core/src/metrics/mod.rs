//! PSNR, SSIM and held-out evaluation.

pub mod ssim;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ImageRGB, Rgb};
use crate::ingest::PosedView;
use crate::raster::render;
use crate::scene::GaussianCloud;

pub use ssim::{dssim, ssim, ssim_with_grad};

pub const PSNR_CAP: f64 = 100.0;

pub fn mse(a: &ImageRGB, b: &ImageRGB) -> Result<f64> {
    a.same_shape(b)?;
    let sum: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.data().len() as f64)
}

/// Peak signal-to-noise ratio for peak value 1, capped at 100 dB.
pub fn psnr(a: &ImageRGB, b: &ImageRGB) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (1.0 / m).log10()).min(PSNR_CAP))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewScore {
    pub name: String,
    pub ssim: f64,
    pub psnr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityScores {
    pub per_view: Vec<ViewScore>,
    pub ssim: f64,
    pub psnr: f64,
}

impl QualityScores {
    pub fn from_views(per_view: Vec<ViewScore>) -> Result<Self> {
        if per_view.is_empty() {
            return Err(Error::EmptyTestSet);
        }
        let n = per_view.len() as f64;
        let ssim = per_view.iter().map(|v| v.ssim).sum::<f64>() / n;
        let psnr = per_view.iter().map(|v| v.psnr).sum::<f64>() / n;
        Ok(Self {
            per_view,
            ssim,
            psnr,
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "view,ssim,psnr")?;
        for v in &self.per_view {
            writeln!(f, "{},{},{}", v.name, v.ssim, v.psnr)?;
        }
        f.flush()?;
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

pub fn score_view(name: &str, rendered: &ImageRGB, truth: &ImageRGB) -> Result<ViewScore> {
    Ok(ViewScore {
        name: name.to_string(),
        ssim: ssim(rendered, truth)?,
        psnr: psnr(rendered, truth)?,
    })
}

/// Renders every test view and scores it against its ground truth.
pub fn evaluate(cloud: &GaussianCloud, views: &[PosedView], background: Rgb) -> Result<QualityScores> {
    if views.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let per_view = views
        .iter()
        .map(|v| {
            let out = render(cloud, &v.camera, background);
            score_view(&v.name, &out.image, &v.image)
        })
        .collect::<Result<Vec<_>>>()?;
    QualityScores::from_views(per_view)
}
