//! JSON manifest written next to a prepared dataset.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::preprocess::ChromaKeyConfig;
use crate::ingest::split::Split;
use crate::ingest::View;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub chroma_key: Option<ChromaKeyConfig>,
    /// Target `[width, height]` when images were resampled.
    pub resize: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestView {
    pub name: String,
    pub camera_id: u32,
    /// `"train"` or `"test"`.
    pub split: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    /// Free-form origin label, e.g. `"synthetic"` or `"colmap"`.
    pub source: String,
    pub holdout_every: usize,
    pub preprocessing: Preprocessing,
    pub views: Vec<ManifestView>,
}

impl DatasetManifest {
    pub fn new(
        source: &str,
        views: &[View],
        split: &Split,
        holdout_every: usize,
        preprocessing: Preprocessing,
    ) -> Self {
        let views = views
            .iter()
            .enumerate()
            .map(|(i, v)| ManifestView {
                name: v.name.clone(),
                camera_id: v.camera_id,
                split: if split.test.contains(&i) { "test" } else { "train" }.to_string(),
            })
            .collect();
        Self {
            source: source.to_string(),
            holdout_every,
            preprocessing,
            views,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    /// Recovers the split for `views`, matched by image name.
    pub fn split_for(&self, views: &[View]) -> Result<Split> {
        let mut split = Split {
            train: Vec::new(),
            test: Vec::new(),
        };
        for (i, v) in views.iter().enumerate() {
            let entry = self
                .views
                .iter()
                .find(|m| m.name == v.name)
                .ok_or_else(|| Error::InvalidConfig(format!("view {} missing from manifest", v.name)))?;
            match entry.split.as_str() {
                "train" => split.train.push(i),
                "test" => split.test.push(i),
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown split `{other}` for {}",
                        v.name
                    )))
                }
            }
        }
        if split.train.is_empty() {
            return Err(Error::TooFewViews {
                views: views.len(),
                every: self.holdout_every,
            });
        }
        Ok(split)
    }
}
