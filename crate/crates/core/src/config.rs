//! Run configuration: one JSON document drives every pipeline stage.

use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::training::{Hyperparams, SplitMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    /// Dataset manifest CSV (`path,label,song_id`).
    pub manifest: PathBuf,
    /// Hyper-image store directory.
    pub store: PathBuf,
    /// Output root for checkpoints, reports, embeddings, and images.
    pub out: PathBuf,
    /// Default audio file for `inspect`.
    pub audio: Option<PathBuf>,
    /// Default checkpoint stem for `embed`, `pca`, `synth`.
    pub checkpoint: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            manifest: PathBuf::from("manifest.csv"),
            store: PathBuf::from("store"),
            out: PathBuf::from("out"),
            audio: None,
            checkpoint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Pipeline sample rate; inputs at other rates are resampled.
    pub sample_rate: u32,
    pub snippet_s: f64,
    pub snippets_per_song: usize,
    pub features: FeatureConfig,
    pub architecture: String,
    pub optimizer: Hyperparams,
    pub k_folds: usize,
    pub split_mode: SplitMode,
    pub seed: u64,
    pub synth_steps: usize,
    pub synth_step_size: f64,
    pub synth_l2_penalty: f64,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sample_rate: 22050,
            snippet_s: 5.0,
            snippets_per_song: 4,
            features: FeatureConfig::default(),
            architecture: "IC(5,15,64)LPC(1,5,64)LPF(384)F(192)O".to_string(),
            optimizer: Hyperparams::default(),
            k_folds: 10,
            split_mode: SplitMode::SongOrdered,
            seed: 0,
            synth_steps: 500,
            synth_step_size: 2.0,
            synth_l2_penalty: 1e-3,
            paths: Paths::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::Config("sample_rate must be positive".into()));
        }
        if self.snippet_s <= 0.0 {
            return Err(Error::Config("snippet_s must be positive".into()));
        }
        if self.snippets_per_song == 0 {
            return Err(Error::Config("snippets_per_song must be positive".into()));
        }
        if self.k_folds < 2 {
            return Err(Error::Config("k_folds must be >= 2".into()));
        }
        self.features.validate()?;
        if self.optimizer.batch_size == 0 || self.optimizer.epochs == 0 {
            return Err(Error::Config(
                "optimizer batch_size and epochs must be positive".into(),
            ));
        }
        if self.optimizer.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        // The architecture must parse against the hyper-image geometry.
        let (h, w) = self.input_extent();
        crate::neuralnet::parse_architecture(&self.architecture, (h, w, 1), 2)?;
        Ok(())
    }

    /// Hyper-image height and width implied by this configuration.
    pub fn input_extent(&self) -> (usize, usize) {
        let h = self.features.stack_height();
        let n_samples = (self.snippet_s * self.sample_rate as f64).round() as usize;
        let w = crate::dsp::frame_count(n_samples, self.features.hop);
        (h, w)
    }

    /// Hash over every field (stamped into checkpoints, reports, embeddings).
    pub fn full_hash(&self) -> String {
        hash_str(&serde_json::to_string(self).expect("serializable"))
    }

    /// Hash over the fields that determine hyper-image content. Stamped into
    /// the feature store; later stages compare against their own value, so
    /// changing training settings does not invalidate extracted features.
    pub fn feature_hash(&self) -> String {
        let projection = (
            self.sample_rate,
            self.snippet_s.to_bits(),
            self.snippets_per_song,
            serde_json::to_string(&self.features).expect("serializable"),
        );
        hash_str(&format!("{projection:?}"))
    }
}

fn hash_str(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid_and_sized() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.input_extent(), (205, 216));
    }

    #[test]
    fn hashes_are_stable_and_sensitive() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.full_hash(), b.full_hash());
        assert_eq!(a.feature_hash(), b.feature_hash());

        b.seed = 42;
        assert_ne!(a.full_hash(), b.full_hash());
        // Seed does not affect feature content.
        assert_eq!(a.feature_hash(), b.feature_hash());

        b.features.n_mels = 64;
        assert_ne!(a.feature_hash(), b.feature_hash());
    }

    #[test]
    fn json_round_trip_with_partial_document() {
        let cfg: RunConfig = serde_json::from_str(r#"{ "seed": 7, "k_folds": 5 }"#).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.k_folds, 5);
        assert_eq!(cfg.sample_rate, 22050);
        cfg.validate().unwrap();

        // Nested sections may be partial too.
        let cfg: RunConfig = serde_json::from_str(
            r#"{ "features": { "n_mels": 64 }, "optimizer": { "epochs": 3 } }"#,
        )
        .unwrap();
        assert_eq!(cfg.features.n_mels, 64);
        assert_eq!(cfg.features.n_mfcc, 20);
        assert_eq!(cfg.optimizer.epochs, 3);
        assert!((cfg.optimizer.learning_rate - 0.01).abs() < 1e-12);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let cfg = RunConfig {
            k_folds: 1,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());

        let cfg = RunConfig {
            architecture: "IC(0,3,8)O".into(),
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
