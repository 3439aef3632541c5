//! Core transforms shared by every feature extractor: FFT, STFT,
//! constant-Q transform, mel filterbank, DCT.

pub mod cqt;
pub mod dct;
pub mod fft;
pub mod mel;
pub mod stft;

pub use cqt::{cqt_center, cqt_power};
pub use dct::dct_ii;
pub use fft::{fft, fft_real};
pub use mel::{hz_to_mel, mel_filterbank, mel_to_hz};
pub use stft::{frame_count, hann, power, power_frames, stft};

use crate::mat::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// One-sided complex spectrogram. Frames are stored contiguously
/// (frame-major): `bins[t * n_bins() .. (t+1) * n_bins()]` is frame `t`.
#[derive(Debug, Clone)]
pub struct ComplexSpectrogram {
    pub bins: Vec<Complex64>,
    pub n_fft: usize,
    pub hop: usize,
    pub n_frames: usize,
    pub sample_rate: u32,
    pub window: String,
}

impl ComplexSpectrogram {
    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn frame(&self, t: usize) -> &[Complex64] {
        let n = self.n_bins();
        &self.bins[t * n..(t + 1) * n]
    }
}

/// One named time-frequency plane: rows are bins, columns are frames.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub name: String,
    pub values: Mat,
    pub bin_labels: Option<Vec<String>>,
    /// Seconds per column.
    pub frame_hop_s: f64,
}

impl FeatureMatrix {
    pub fn n_bins(&self) -> usize {
        self.values.rows()
    }

    pub fn n_frames(&self) -> usize {
        self.values.cols()
    }
}
