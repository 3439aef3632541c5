//! Hyper-image stores: id -> pixels, in memory or on disk.
//!
//! The on-disk layout is one `<id>.tnsr` tensor plus a `<id>.json` sidecar
//! per snippet.

use crate::error::{Error, Result};
use crate::features::{HyperImage, NormStats, PlaneInfo};
use crate::mat::Mat;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::{Path, PathBuf};

/// Resolves snippet ids to hyper-images during training and embedding.
pub trait FeatureStore: Sync {
    fn fetch(&self, id: &str) -> Result<HyperImage>;
    fn ids(&self) -> Vec<String>;
}

/// In-memory store used by tests and the synthetic benchmark.
#[derive(Default)]
pub struct MemoryStore {
    items: HashMap<String, HyperImage>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: &str, image: HyperImage) {
        self.items.insert(id.to_string(), image);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

impl FeatureStore for MemoryStore {
    fn fetch(&self, id: &str) -> Result<HyperImage> {
        self.items
            .get(id)
            .cloned()
            .ok_or_else(|| Error::Data(format!("hyper-image `{id}` not in store")))
    }

    fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.items.keys().cloned().collect();
        ids.sort();
        ids
    }
}

/// JSON sidecar stored next to each hyper-image tensor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HyperImageSidecar {
    pub source_id: Option<String>,
    pub label: Option<String>,
    pub planes: Vec<PlaneInfo>,
    pub norm_stats: Vec<NormStats>,
    pub config_hash: String,
}

/// Directory-backed store reading `<id>.tnsr` + `<id>.json` pairs.
pub struct DirectoryStore {
    dir: PathBuf,
}

impl DirectoryStore {
    pub fn open(dir: &Path) -> Result<Self> {
        if !dir.is_dir() {
            return Err(Error::Data(format!(
                "feature store directory `{}` does not exist",
                dir.display()
            )));
        }
        Ok(DirectoryStore {
            dir: dir.to_path_buf(),
        })
    }

    /// Write one hyper-image and its sidecar. Returns the tensor path.
    pub fn save(dir: &Path, id: &str, image: &HyperImage, config_hash: &str) -> Result<PathBuf> {
        let tensor_path = dir.join(format!("{id}.tnsr"));
        crate::tnsr::write_tnsr(
            &tensor_path,
            &[image.height(), image.width()],
            image.pixels.data(),
        )?;
        let sidecar = HyperImageSidecar {
            source_id: image.source_id.clone(),
            label: image.label.clone(),
            planes: image.planes.clone(),
            norm_stats: image.norm_stats.clone(),
            config_hash: config_hash.to_string(),
        };
        std::fs::write(
            dir.join(format!("{id}.json")),
            serde_json::to_string_pretty(&sidecar).expect("serializable"),
        )?;
        Ok(tensor_path)
    }

    /// Config hash of one stored snippet (they are all stamped identically
    /// by a single extract run).
    pub fn stored_hash(&self, id: &str) -> Result<String> {
        let sidecar = self.sidecar(id)?;
        Ok(sidecar.config_hash)
    }

    fn sidecar(&self, id: &str) -> Result<HyperImageSidecar> {
        let text = std::fs::read_to_string(self.dir.join(format!("{id}.json")))?;
        serde_json::from_str(&text).map_err(|e| Error::Data(format!("sidecar for `{id}`: {e}")))
    }
}

impl FeatureStore for DirectoryStore {
    fn fetch(&self, id: &str) -> Result<HyperImage> {
        let (dims, data) = crate::tnsr::read_tnsr(&self.dir.join(format!("{id}.tnsr")))?;
        let [h, w] = dims[..] else {
            return Err(Error::Shape(format!(
                "hyper-image `{id}` has rank {} tensor, expected 2",
                dims.len()
            )));
        };
        let sidecar = self.sidecar(id)?;
        let declared: usize = sidecar.planes.iter().map(|p| p.rows).sum();
        if declared != h {
            return Err(Error::Shape(format!(
                "hyper-image `{id}`: sidecar declares {declared} rows, tensor has {h}"
            )));
        }
        Ok(HyperImage {
            planes: sidecar.planes,
            pixels: Mat::from_vec(h, w, data),
            norm_stats: sidecar.norm_stats,
            source_id: sidecar.source_id,
            label: sidecar.label,
        })
    }

    fn ids(&self) -> Vec<String> {
        let mut ids = Vec::new();
        if let Ok(entries) = std::fs::read_dir(&self.dir) {
            for entry in entries.flatten() {
                let path = entry.path();
                if path.extension().map(|e| e == "tnsr").unwrap_or(false) {
                    if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                        ids.push(stem.to_string());
                    }
                }
            }
        }
        ids.sort();
        ids
    }
}
