//! Mel scale and triangular filterbank.

use crate::error::{Error, Result};
use crate::mat::Mat;

/// Hz to mel: `2595 * log10(1 + f/700)`.
pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

/// Mel to Hz, inverse of [`hz_to_mel`].
pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filterbank, `n_mels x (n_fft/2 + 1)`.
///
/// Peaks sit at the inverse-mel of `n_mels + 2` equally spaced mel points'
/// interior; each triangle is linear in frequency between its band edges and
/// evaluated at the FFT bin centers `k * sample_rate / n_fft`.
pub fn mel_filterbank(
    n_fft: usize,
    n_mels: usize,
    sample_rate: u32,
    fmin: f64,
    fmax: f64,
) -> Result<Mat> {
    if n_mels < 2 {
        return Err(Error::Dsp(format!("n_mels must be >= 2, got {n_mels}")));
    }
    let nyquist = sample_rate as f64 / 2.0;
    if !(fmin >= 0.0 && fmin < fmax && fmax <= nyquist) {
        return Err(Error::Dsp(format!(
            "mel band edges must satisfy 0 <= fmin < fmax <= {nyquist}, got [{fmin}, {fmax}]"
        )));
    }

    let n_bins = n_fft / 2 + 1;
    let mel_lo = hz_to_mel(fmin);
    let mel_hi = hz_to_mel(fmax);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
        .collect();

    let bin_hz = sample_rate as f64 / n_fft as f64;
    let mut fb = Mat::zeros(n_mels, n_bins);
    for m in 0..n_mels {
        let (lo, peak, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        let row = fb.row_mut(m);
        for (k, w) in row.iter_mut().enumerate() {
            let f = k as f64 * bin_hz;
            if f <= lo || f >= hi {
                continue;
            }
            *w = if f <= peak {
                (f - lo) / (peak - lo)
            } else {
                (hi - f) / (hi - peak)
            };
        }
        if fb.row(m).iter().sum::<f64>() <= 0.0 {
            return Err(Error::Dsp(format!(
                "degenerate mel filter {m}: band [{lo:.2}, {hi:.2}] Hz covers no FFT bin"
            )));
        }
    }
    Ok(fb)
}
