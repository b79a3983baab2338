//! Ground-truth image preprocessing: green-screen removal and resampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageRGB;

/// A pixel is green when `G - max(R, B) > dominance` and `G > min_green`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChromaKeyConfig {
    pub dominance: f64,
    pub min_green: f64,
}

impl Default for ChromaKeyConfig {
    fn default() -> Self {
        Self {
            dominance: 0.15,
            min_green: 0.25,
        }
    }
}

impl ChromaKeyConfig {
    pub fn is_green(&self, rgb: [f64; 3]) -> bool {
        rgb[1] - rgb[0].max(rgb[2]) > self.dominance && rgb[1] > self.min_green
    }
}

/// Replaces green pixels with black.
pub fn chroma_key(img: &ImageRGB, cfg: &ChromaKeyConfig) -> ImageRGB {
    let mut data = img.data().to_vec();
    for px in data.chunks_exact_mut(3) {
        if cfg.is_green([px[0], px[1], px[2]]) {
            px.fill(0.0);
        }
    }
    ImageRGB::from_raw(img.width(), img.height(), data)
}

/// Source sample positions and weights for one output axis, pixel-center
/// aligned.
fn axis_taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let ratio = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let x = ((i as f64 + 0.5) * ratio - 0.5).clamp(0.0, (src - 1) as f64);
            let x0 = x.floor() as usize;
            let x1 = (x0 + 1).min(src - 1);
            (x0, x1, x - x0 as f64)
        })
        .collect()
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

/// Bilinear resampling to `width x height`.
pub fn resize(img: &ImageRGB, width: usize, height: usize) -> Result<ImageRGB> {
    if width == 0 || height == 0 {
        return Err(Error::ZeroDimension);
    }
    if width == img.width() && height == img.height() {
        return Ok(img.clone());
    }
    let xs = axis_taps(img.width(), width);
    let ys = axis_taps(img.height(), height);
    let mut data = Vec::with_capacity(width * height * 3);
    for &(y0, y1, ty) in &ys {
        for &(x0, x1, tx) in &xs {
            let p00 = img.pixel(x0, y0);
            let p10 = img.pixel(x1, y0);
            let p01 = img.pixel(x0, y1);
            let p11 = img.pixel(x1, y1);
            for c in 0..3 {
                let top = lerp(p00[c], p10[c], tx);
                let bottom = lerp(p01[c], p11[c], tx);
                data.push(lerp(top, bottom, ty).clamp(0.0, 1.0));
            }
        }
    }
    Ok(ImageRGB::from_raw(width, height, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn px(rgb: [f64; 3]) -> ImageRGB {
        ImageRGB::new(1, 1, rgb.to_vec()).unwrap()
    }

    #[test]
    fn green_classification() {
        let cfg = ChromaKeyConfig::default();
        assert_eq!(chroma_key(&px([0.0, 1.0, 0.0]), &cfg).pixel(0, 0), [0.0; 3]);
        assert_eq!(chroma_key(&px([1.0, 1.0, 1.0]), &cfg).pixel(0, 0), [1.0; 3]);
        assert_eq!(chroma_key(&px([0.2, 0.5, 0.2]), &cfg).pixel(0, 0), [0.0; 3]);
        let strict = ChromaKeyConfig {
            dominance: 0.35,
            ..cfg
        };
        assert_eq!(
            chroma_key(&px([0.2, 0.5, 0.2]), &strict).pixel(0, 0),
            [0.2, 0.5, 0.2]
        );
        // dark greens stay
        assert_eq!(
            chroma_key(&px([0.0, 0.2, 0.0]), &cfg).pixel(0, 0),
            [0.0, 0.2, 0.0]
        );
    }

    #[test]
    fn resize_constant_identity_and_ramp() {
        let gray = ImageRGB::filled(1280, 960, [0.5; 3]);
        let small = resize(&gray, 640, 480).unwrap();
        assert!(small.data().iter().all(|&v| v == 0.5));

        let img = ImageRGB::new(2, 1, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(resize(&img, 2, 1).unwrap(), img);

        let up = resize(&img, 4, 1).unwrap();
        let reds: Vec<f64> = (0..4).map(|x| up.pixel(x, 0)[0]).collect();
        assert_eq!(reds, vec![0.0, 0.25, 0.75, 1.0]);

        assert!(matches!(resize(&img, 0, 3), Err(Error::ZeroDimension)));
    }

    proptest! {
        #[test]
        fn chroma_key_is_idempotent(vals in proptest::collection::vec(0.0f64..=1.0, 48)) {
            let img = ImageRGB::new(4, 4, vals).unwrap();
            let cfg = ChromaKeyConfig::default();
            let once = chroma_key(&img, &cfg);
            prop_assert_eq!(chroma_key(&once, &cfg), once);
        }
    }
}
