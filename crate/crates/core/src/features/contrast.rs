//! Spectral contrast: per-band difference between log peak and log valley
//! magnitudes. Separates tonal content from noise.

use super::FeatureConfig;
use crate::audio_io::AudioBuffer;
use crate::dsp::{stft, ComplexSpectrogram, FeatureMatrix};
use crate::error::{Error, Result};
use crate::mat::Mat;

/// Lower edge of the first octave band.
pub const CONTRAST_BASE_HZ: f64 = 200.0;
const MAG_FLOOR: f64 = 1e-30;

pub(crate) fn spectral_contrast_from(
    spec: &ComplexSpectrogram,
    n_bands: usize,
    alpha: f64,
) -> Result<FeatureMatrix> {
    if n_bands < 1 {
        return Err(Error::feature("contrast", "n_bands must be >= 1"));
    }
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::feature("contrast", "alpha must be in (0, 0.5]"));
    }

    let n_bins = spec.n_bins();
    let bin_hz = spec.sample_rate as f64 / spec.n_fft as f64;
    let nyquist = spec.sample_rate as f64 / 2.0;

    // Band edges: residual low band [0, 200), then octaves from 200 Hz up,
    // the last band clipped at Nyquist.
    let mut edges = vec![0.0, CONTRAST_BASE_HZ];
    for b in 1..=n_bands {
        edges.push((CONTRAST_BASE_HZ * 2f64.powi(b as i32)).min(nyquist));
    }

    // Bin ranges per band (half-open in frequency).
    let mut ranges = Vec::with_capacity(n_bands + 1);
    for band in 0..=n_bands {
        let lo_bin = (edges[band] / bin_hz).ceil() as usize;
        let hi_bin = if band == n_bands {
            n_bins
        } else {
            ((edges[band + 1] / bin_hz).ceil() as usize).min(n_bins)
        };
        if hi_bin <= lo_bin {
            return Err(Error::feature(
                "contrast",
                format!(
                    "band {band} [{:.0}, {:.0}) Hz contains no FFT bins",
                    edges[band],
                    edges.get(band + 1).copied().unwrap_or(nyquist)
                ),
            ));
        }
        ranges.push(lo_bin..hi_bin);
    }

    let mut out = Mat::zeros(n_bands + 1, spec.n_frames);
    let mut mags: Vec<f64> = Vec::new();
    for t in 0..spec.n_frames {
        let frame = spec.frame(t);
        for (band, range) in ranges.iter().enumerate() {
            mags.clear();
            mags.extend(frame[range.clone()].iter().map(|c| c.norm()));
            mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let k = ((alpha * mags.len() as f64).ceil() as usize).clamp(1, mags.len());
            let valley: f64 = mags[..k].iter().sum::<f64>() / k as f64;
            let peak: f64 = mags[mags.len() - k..].iter().sum::<f64>() / k as f64;
            let contrast = peak.max(MAG_FLOOR).ln() - valley.max(MAG_FLOOR).ln();
            out.set(band, t, contrast);
        }
    }

    let labels = (0..=n_bands)
        .map(|b| format!("{:.0}Hz", edges[b]))
        .collect();

    Ok(FeatureMatrix {
        name: "contrast".to_string(),
        values: out,
        bin_labels: Some(labels),
        frame_hop_s: spec.hop as f64 / spec.sample_rate as f64,
    })
}

/// Octave-band spectral contrast: `n_bands + 1` rows (residual low band
/// plus `n_bands` octaves from 200 Hz), `log(peak) - log(valley)` per band
/// and frame, where peak/valley average the top/bottom `ceil(alpha * K)`
/// magnitudes of the band's K bins.
pub fn spectral_contrast(
    buf: &AudioBuffer,
    n_bands: usize,
    alpha: f64,
    cfg: &FeatureConfig,
) -> Result<FeatureMatrix> {
    let spec = stft(buf, cfg.n_fft, cfg.hop)?;
    spectral_contrast_from(&spec, n_bands, alpha)
}
