//! Gaussian splatting toolkit for reconstructing an object from posed
//! images: COLMAP ingestion, scene initialization, a differentiable tile
//! rasterizer, training, image-quality metrics, synthetic ground truth and
//! resource benchmarks.

pub mod bench;
pub mod camera;
pub mod cli;
pub mod error;
pub mod image;
pub mod ingest;
pub mod linalg;
pub mod metrics;
pub mod raster;
pub mod scene;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
