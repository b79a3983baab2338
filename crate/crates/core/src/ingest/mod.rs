//! Structure-from-motion ingestion: COLMAP parsing, image preprocessing and
//! train/test splitting.

pub mod colmap;
pub mod manifest;
pub mod preprocess;
pub mod split;

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use crate::camera::{Intrinsics, PinholeCamera, Pose};
use crate::error::{Error, Result};
use crate::image::ImageRGB;
use crate::linalg::Vec3;

pub use colmap::Format;
pub use manifest::{DatasetManifest, ManifestView, Preprocessing};
pub use preprocess::{chroma_key, resize, ChromaKeyConfig};
pub use split::{split_train_test, Split, DEFAULT_HOLDOUT_EVERY};

/// One posed image.
#[derive(Debug, Clone, PartialEq)]
pub struct View {
    pub image_id: u32,
    pub name: String,
    pub camera_id: u32,
    pub pose: Pose,
    pub image: Option<ImageRGB>,
}

/// A camera together with its ground-truth image.
#[derive(Debug, Clone, PartialEq)]
pub struct PosedView {
    pub name: String,
    pub camera: PinholeCamera,
    pub image: ImageRGB,
}

/// Sparse reconstructed point. Colors are in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SfmPoint {
    pub id: u64,
    pub position: Vec3,
    pub color: [f64; 3],
    pub error: f64,
    pub track_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SfmBundle {
    pub cameras: BTreeMap<u32, Intrinsics>,
    pub views: Vec<View>,
    pub points: Vec<SfmPoint>,
}

impl SfmBundle {
    /// Checks that every view's camera exists and that loaded images match
    /// their camera resolution.
    pub fn validate(&self) -> Result<()> {
        for v in &self.views {
            let k = self
                .cameras
                .get(&v.camera_id)
                .ok_or(Error::UnknownCameraId(v.camera_id))?;
            if let Some(img) = &v.image {
                if img.width() != k.width || img.height() != k.height {
                    return Err(Error::DimensionMismatch(format!(
                        "image {} is {}x{} but camera {} is {}x{}",
                        v.name,
                        img.width(),
                        img.height(),
                        k.camera_id,
                        k.width,
                        k.height
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn posed_view(&self, view: &View) -> Result<PosedView> {
        let image = view
            .image
            .clone()
            .ok_or_else(|| Error::Image(format!("view {} has no ground-truth image", view.name)))?;
        Ok(PosedView {
            name: view.name.clone(),
            camera: self.camera(view)?,
            image,
        })
    }

    pub fn camera(&self, view: &View) -> Result<PinholeCamera> {
        let k = self
            .cameras
            .get(&view.camera_id)
            .ok_or(Error::UnknownCameraId(view.camera_id))?;
        PinholeCamera::new(*k, view.pose)
    }

    /// Reads the three sparse files from a directory laid out by COLMAP.
    pub fn load_sparse(dir: &Path) -> Result<Self> {
        let (sparse, fmt) = colmap::locate_sparse(dir)?;
        let ext = fmt.extension();
        let images = sparse.join(format!("images.{ext}"));
        if !images.is_file() {
            return Err(Error::MissingImagesFile(sparse));
        }
        let points = sparse.join(format!("points3D.{ext}"));
        if !points.is_file() {
            return Err(Error::MissingPointsFile(sparse));
        }
        let bundle = SfmBundle {
            cameras: colmap::parse_cameras(&sparse.join(format!("cameras.{ext}")), fmt)?,
            views: colmap::parse_views(&images, fmt)?,
            points: colmap::parse_points(&points, fmt)?,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn write_sparse(&self, dir: &Path, format: Format) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let ext = format.extension();
        colmap::write_cameras(&dir.join(format!("cameras.{ext}")), &self.cameras, format)?;
        colmap::write_views(&dir.join(format!("images.{ext}")), &self.views, format)?;
        colmap::write_points(&dir.join(format!("points3D.{ext}")), &self.points, format)?;
        Ok(())
    }

    /// Loads every view's PNG from `image_dir` in parallel.
    pub fn load_images(&mut self, image_dir: &Path) -> Result<()> {
        let loaded: Vec<ImageRGB> = self
            .views
            .par_iter()
            .map(|v| ImageRGB::load_png(&image_dir.join(&v.name)))
            .collect::<Result<_>>()?;
        for (v, img) in self.views.iter_mut().zip(loaded) {
            v.image = Some(img);
        }
        self.validate()
    }

    /// Copy without pixel data, e.g. for comparing geometry only.
    pub fn without_images(&self) -> Self {
        let mut out = self.clone();
        for v in &mut out.views {
            v.image = None;
        }
        out
    }
}

/// A bundle with ground-truth images and a train/test assignment.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub bundle: SfmBundle,
    pub split: Split,
}

impl Dataset {
    /// Loads `dir/sparse…`, `dir/images/*.png` and, if present,
    /// `dir/manifest.json` for the split; otherwise holds out every
    /// [`DEFAULT_HOLDOUT_EVERY`]-th view.
    pub fn load(dir: &Path) -> Result<Self> {
        let mut bundle = SfmBundle::load_sparse(dir)?;
        bundle.load_images(&dir.join("images"))?;
        let manifest_path = dir.join(manifest::MANIFEST_FILE);
        let split = if manifest_path.is_file() {
            let m = DatasetManifest::load(&manifest_path)?;
            m.split_for(&bundle.views)?
        } else {
            split_train_test(bundle.views.len(), DEFAULT_HOLDOUT_EVERY)?
        };
        Ok(Self { bundle, split })
    }

    pub fn cameras(&self, indices: &[usize]) -> Result<Vec<PinholeCamera>> {
        indices
            .iter()
            .map(|&i| self.bundle.camera(&self.bundle.views[i]))
            .collect()
    }

    /// Posed ground-truth images for the given view indices.
    pub fn posed_images(&self, indices: &[usize]) -> Result<Vec<PosedView>> {
        indices
            .iter()
            .map(|&i| self.bundle.posed_view(&self.bundle.views[i]))
            .collect()
    }

    pub fn train_views(&self) -> Result<Vec<PosedView>> {
        self.posed_images(&self.split.train)
    }

    pub fn test_views(&self) -> Result<Vec<PosedView>> {
        self.posed_images(&self.split.test)
    }
}
