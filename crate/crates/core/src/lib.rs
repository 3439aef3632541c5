//! Audio "hyper-image" pipeline: multi-feature spectrogram stacks, a
//! from-scratch convolutional network trained on them, and latent song
//! embeddings read out of the trained net.
//!
//! The crate is organized along the pipeline stages:
//!
//! * [`audio_io`] — WAV decoding, resampling, snippet slicing, dataset manifests.
//! * [`dsp`] — FFT, STFT, constant-Q transform, mel filterbank, DCT.
//! * [`features`] — the six feature planes and their assembly into a
//!   normalized hyper-image.
//! * [`neuralnet`] — dense tensors, the conv/LRN/pool/FC layer zoo with
//!   analytic adjoints, and SGD.
//! * [`training`] — dataset splits, the training loop, k-fold cross
//!   validation, precision@k.
//! * [`embedding`] — latent vectors from the last hidden layer, PCA, and
//!   gradient-based hyper-image synthesis.
//! * [`tnsr`] — the TNSR/TNSC binary tensor formats shared by all stages.

pub mod audio_io;
pub mod config;
pub mod corpus;
pub mod dsp;
pub mod embedding;
pub mod error;
pub mod features;
pub mod mat;
pub mod neuralnet;
pub mod signal;
pub mod tnsr;
pub mod training;

pub use audio_io::{AudioBuffer, DatasetManifest, ManifestEntry};
pub use config::RunConfig;
pub use error::{Error, Result, WavError};
pub use features::{FeatureConfig, HyperImage};
pub use mat::Mat;
pub use neuralnet::{Checkpoint, LayerSpec, NetworkSpec, Tensor};
pub use training::{FeatureStore, FoldReport, SplitMode, SplitPlan};
