//! Latent song embeddings from the trained network, PCA reduction, and
//! gradient-based hyper-image synthesis.

pub mod pca;

pub use pca::{pca_fit, pca_project, Pca};

use crate::error::{Error, Result};
use crate::features::HyperImage;
use crate::mat::Mat;
use crate::neuralnet::{forward, input_gradient, softmax, Checkpoint, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Activation vector of the last fully connected layer (post-ReLU),
/// flattened. This is the latent descriptor of the input.
pub fn extract_embedding(net: &Checkpoint, image: &HyperImage) -> Result<Vec<f64>> {
    let (h, w, c) = net.spec.input_shape;
    if c != 1 || image.height() != h || image.width() != w {
        return Err(Error::Shape(format!(
            "hyper-image {}x{} does not match network input {h}x{w}",
            image.height(),
            image.width()
        )));
    }
    let x = Tensor::from_vec(&[h, w, 1], image.pixels.data().to_vec())?;
    let pass = forward(net, &x)?;
    let emb = pass
        .embedding(&net.spec)
        .ok_or_else(|| Error::Arch("architecture has no fully connected layer".into()))?;
    Ok(emb.data().to_vec())
}

/// Cosine similarity in [-1, 1].
pub fn similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "vector widths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let na: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Data("cosine similarity of a zero vector".into()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Result of gradient-based input synthesis.
#[derive(Debug, Clone)]
pub struct Synthesis {
    /// Final input, shaped like the network input.
    pub pixels: Tensor,
    /// Target-class softmax probability per step, initialization included.
    pub trajectory: Vec<f64>,
}

/// Start from small seeded Gaussian noise and descend the target-class
/// cross-entropy: `x <- x - step_size * (dL/dx + l2_penalty * x)`.
pub fn synthesize_hyperimage(
    net: &Checkpoint,
    target: usize,
    steps: usize,
    step_size: f64,
    l2_penalty: f64,
    seed: u64,
) -> Result<Synthesis> {
    if steps == 0 {
        return Err(Error::Config("synthesis needs at least one step".into()));
    }
    if target >= net.n_classes() {
        return Err(Error::Data(format!(
            "target class {target} outside {} classes",
            net.n_classes()
        )));
    }
    let (h, w, c) = net.spec.input_shape;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 0.01).expect("positive std");
    let mut x = Tensor::from_vec(
        &[h, w, c],
        (0..h * w * c).map(|_| normal.sample(&mut rng)).collect(),
    )?;

    let prob_of = |x: &Tensor| -> Result<f64> {
        let pass = forward(net, x)?;
        Ok(softmax(pass.logits().data())[target])
    };

    let mut trajectory = Vec::with_capacity(steps + 1);
    trajectory.push(prob_of(&x)?);
    for _ in 0..steps {
        let grad = input_gradient(net, &x, target)?;
        for (xv, gv) in x.data_mut().iter_mut().zip(grad.data()) {
            *xv -= step_size * (gv + l2_penalty * *xv);
        }
        let p = prob_of(&x)?;
        if !p.is_finite() {
            return Err(Error::Divergence {
                fold: 0,
                epoch: trajectory.len(),
                detail: "synthesis probability diverged".into(),
            });
        }
        trajectory.push(p);
    }
    Ok(Synthesis {
        pixels: x,
        trajectory,
    })
}

// ---------------------------------------------------------------------------
// Embedding sets
// ---------------------------------------------------------------------------

/// Per-item latent vectors with aligned ids and labels, plus an optional
/// fitted PCA model.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub vectors: Mat,
    pub ids: Vec<String>,
    pub labels: Vec<String>,
    pub pca: Option<Pca>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingMeta {
    ids: Vec<String>,
    labels: Vec<String>,
    width: usize,
    config_hash: String,
}

impl EmbeddingSet {
    pub fn width(&self) -> usize {
        self.vectors.cols()
    }

    pub fn len(&self) -> usize {
        self.vectors.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Write `<stem>.tnsc` (vectors and PCA tensors) and `<stem>.json`
    /// (ids/labels).
    pub fn save(&self, stem: &Path, config_hash: &str) -> Result<()> {
        let mut entries = vec![(
            "vectors".to_string(),
            vec![self.len(), self.width()],
            self.vectors.data().to_vec(),
        )];
        if let Some(p) = &self.pca {
            entries.push((
                "pca.components".to_string(),
                vec![p.components.rows(), p.components.cols()],
                p.components.data().to_vec(),
            ));
            entries.push((
                "pca.eigenvalues".to_string(),
                vec![p.eigenvalues.len()],
                p.eigenvalues.clone(),
            ));
            entries.push((
                "pca.explained_variance_ratio".to_string(),
                vec![p.explained_variance_ratio.len()],
                p.explained_variance_ratio.clone(),
            ));
            entries.push(("pca.mean".to_string(), vec![p.mean.len()], p.mean.clone()));
        }
        crate::tnsr::write_tnsc(&stem.with_extension("tnsc"), &entries)?;
        let meta = EmbeddingMeta {
            ids: self.ids.clone(),
            labels: self.labels.clone(),
            width: self.width(),
            config_hash: config_hash.to_string(),
        };
        std::fs::write(
            stem.with_extension("json"),
            serde_json::to_string_pretty(&meta).expect("serializable"),
        )?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<EmbeddingSet> {
        let meta: EmbeddingMeta =
            serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json"))?)
                .map_err(|e| Error::Data(format!("embedding header: {e}")))?;
        let entries = crate::tnsr::read_tnsc(&stem.with_extension("tnsc"))?;
        let mut vectors = None;
        let mut components = None;
        let mut eigenvalues = None;
        let mut ratios = None;
        let mut mean = None;
        for (name, dims, data) in entries {
            match name.as_str() {
                "vectors" => {
                    let [r, c] = dims[..] else {
                        return Err(Error::Shape("vectors tensor must be rank 2".into()));
                    };
                    vectors = Some(Mat::from_vec(r, c, data));
                }
                "pca.components" => {
                    let [r, c] = dims[..] else {
                        return Err(Error::Shape("pca.components must be rank 2".into()));
                    };
                    components = Some(Mat::from_vec(r, c, data));
                }
                "pca.eigenvalues" => eigenvalues = Some(data),
                "pca.explained_variance_ratio" => ratios = Some(data),
                "pca.mean" => mean = Some(data),
                _ => {}
            }
        }
        let vectors = vectors.ok_or_else(|| Error::Data("missing `vectors` tensor".into()))?;
        if vectors.rows() != meta.ids.len() || meta.ids.len() != meta.labels.len() {
            return Err(Error::Data("ids/labels/vectors are not aligned".into()));
        }
        let pca = match (components, eigenvalues, ratios, mean) {
            (Some(c), Some(e), Some(r), Some(m)) => Some(Pca {
                components: c,
                eigenvalues: e,
                explained_variance_ratio: r,
                mean: m,
            }),
            _ => None,
        };
        Ok(EmbeddingSet {
            vectors,
            ids: meta.ids,
            labels: meta.labels,
            pca,
        })
    }
}
