//! Differentiable tile-based Gaussian rasterizer.
//!
//! `render` = [`project`] → [`bin_and_sort`] → [`blend_forward`]. The
//! backward pass ([`blend_backward`]) consumes the projections, bins and
//! [`BlendState`] retained by [`render_for_backward`].

pub mod backward;
pub mod bins;
pub mod forward;
pub mod project;

use serde::{Deserialize, Serialize};

use crate::camera::PinholeCamera;
use crate::error::Result;
use crate::image::Rgb;
use crate::scene::GaussianCloud;

pub use backward::{blend_backward, Gradients};
pub use bins::{bin_and_sort, TileBins};
pub use forward::{blend_forward, BlendState, RenderedView};
pub use project::{project, SplatProjection};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RasterConfig {
    pub tile_size: usize,
    /// Per-splat opacity cap.
    pub alpha_cap: f64,
    /// Splats contributing less opacity than this at a pixel are skipped.
    pub alpha_min: f64,
    /// Compositing stops once transmittance drops below this.
    pub transmittance_min: f64,
    /// Screen-space low-pass added to the projected covariance diagonal.
    pub dilation: f64,
    /// Footprint half-width in standard deviations of the major axis.
    pub radius_sigmas: f64,
    /// Near plane in view-space depth.
    pub near: f64,
}

impl Default for RasterConfig {
    fn default() -> Self {
        Self {
            tile_size: 16,
            alpha_cap: 0.99,
            alpha_min: 1.0 / 255.0,
            transmittance_min: 1e-4,
            dilation: 0.3,
            radius_sigmas: 3.0,
            near: 0.01,
        }
    }
}

/// Everything retained from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct RenderOutput {
    pub view: RenderedView,
    pub projections: Vec<SplatProjection>,
    pub bins: TileBins,
    pub state: BlendState,
}

pub fn render_for_backward(
    cloud: &GaussianCloud,
    cam: &PinholeCamera,
    background: Rgb,
    cfg: &RasterConfig,
) -> RenderOutput {
    let projections = project(cloud, cam, cfg);
    let bins = bin_and_sort(&projections, cam.width(), cam.height(), cfg.tile_size);
    let (view, state) = blend_forward(&bins, &projections, background, cfg);
    RenderOutput {
        view,
        projections,
        bins,
        state,
    }
}

pub fn render_with(
    cloud: &GaussianCloud,
    cam: &PinholeCamera,
    background: Rgb,
    cfg: &RasterConfig,
) -> RenderedView {
    render_for_backward(cloud, cam, background, cfg).view
}

pub fn render(cloud: &GaussianCloud, cam: &PinholeCamera, background: Rgb) -> RenderedView {
    render_with(cloud, cam, background, &RasterConfig::default())
}

/// Gradients of `Σ d_pixels · image` for a retained forward pass.
pub fn backward(
    cloud: &GaussianCloud,
    cam: &PinholeCamera,
    out: &RenderOutput,
    background: Rgb,
    d_pixels: &[f64],
    cfg: &RasterConfig,
) -> Result<Gradients> {
    blend_backward(
        cloud,
        cam,
        &out.projections,
        &out.bins,
        &out.state,
        background,
        d_pixels,
        cfg,
    )
}
