//! Constant-Q transform by direct per-bin windowed kernels.
//!
//! O(n_bins * kernel_len) per frame — fine at desk scale. Used for
//! inspection output; the hyper-image does not include it.

use super::stft::{frame_count, hann};
use crate::audio_io::AudioBuffer;
use crate::dsp::FeatureMatrix;
use crate::error::{Error, Result};
use crate::mat::Mat;

/// Center frequency of CQT bin `b`.
pub fn cqt_center(fmin: f64, bins_per_octave: usize, b: usize) -> f64 {
    fmin * 2f64.powf(b as f64 / bins_per_octave as f64)
}

/// Magnitude-squared constant-Q transform.
///
/// Per-bin kernels share `Q = 1 / (2^(1/bins_per_octave) - 1)`; kernel `b`
/// has length `ceil(Q * sr / f_b)`, Hann-windowed, centered on each frame
/// center `t * hop` (zero outside the signal). The frame grid matches
/// [`super::stft::stft`] so panels line up column for column.
pub fn cqt_power(
    buf: &AudioBuffer,
    fmin: f64,
    bins_per_octave: usize,
    n_bins: usize,
    hop: usize,
) -> Result<FeatureMatrix> {
    if fmin <= 0.0 || bins_per_octave == 0 || n_bins == 0 || hop == 0 {
        return Err(Error::Dsp("cqt parameters must be positive".into()));
    }
    let nyquist = buf.sample_rate as f64 / 2.0;
    let f_top = cqt_center(fmin, bins_per_octave, n_bins - 1);
    if f_top >= nyquist {
        return Err(Error::Dsp(format!(
            "cqt top bin at {f_top:.1} Hz violates Nyquist {nyquist:.1} Hz"
        )));
    }

    let sr = buf.sample_rate as f64;
    let q = 1.0 / (2f64.powf(1.0 / bins_per_octave as f64) - 1.0);
    let n_frames = frame_count(buf.samples.len(), hop);

    // Precompute kernels: (cos, sin) pairs weighted by the window, normalized
    // by kernel length so bins are comparable across octaves.
    struct Kernel {
        re: Vec<f64>,
        im: Vec<f64>,
    }
    let mut kernels = Vec::with_capacity(n_bins);
    for b in 0..n_bins {
        let f = cqt_center(fmin, bins_per_octave, b);
        let len = (q * sr / f).ceil() as usize;
        let len = len.max(2);
        let win = hann(len);
        let norm = 1.0 / len as f64;
        let w = 2.0 * std::f64::consts::PI * f / sr;
        let mut re = Vec::with_capacity(len);
        let mut im = Vec::with_capacity(len);
        for (i, wv) in win.iter().enumerate() {
            let ang = w * i as f64;
            re.push(wv * norm * ang.cos());
            im.push(-wv * norm * ang.sin());
        }
        kernels.push(Kernel { re, im });
    }

    let samples = &buf.samples;
    let mut out = Mat::zeros(n_bins, n_frames);
    for (b, kern) in kernels.iter().enumerate() {
        let half = kern.re.len() / 2;
        for t in 0..n_frames {
            let center = t * hop;
            let start = center as isize - half as isize;
            let mut acc_re = 0.0;
            let mut acc_im = 0.0;
            for i in 0..kern.re.len() {
                let pos = start + i as isize;
                if pos < 0 || pos as usize >= samples.len() {
                    continue;
                }
                let s = samples[pos as usize];
                acc_re += s * kern.re[i];
                acc_im += s * kern.im[i];
            }
            out.set(b, t, acc_re * acc_re + acc_im * acc_im);
        }
    }

    let labels = (0..n_bins)
        .map(|b| format!("{:.1}Hz", cqt_center(fmin, bins_per_octave, b)))
        .collect();

    Ok(FeatureMatrix {
        name: "cqt".to_string(),
        values: out,
        bin_labels: Some(labels),
        frame_hop_s: hop as f64 / sr,
    })
}
