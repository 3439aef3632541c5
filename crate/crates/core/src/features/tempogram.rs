//! Cyclic tempogram: tempo-time representation where tempi differing by a
//! power of two land in the same bin.

use super::melspec::mel_spectrogram_from;
use super::FeatureConfig;
use crate::audio_io::AudioBuffer;
use crate::dsp::{hann, stft, ComplexSpectrogram, FeatureMatrix};
use crate::error::{Error, Result};
use crate::mat::Mat;

/// Tempo analysis range in BPM.
pub const TEMPO_MIN_BPM: f64 = 30.0;
pub const TEMPO_MAX_BPM: f64 = 480.0;
/// One tempo octave covered by the cyclic bins.
pub const CYCLE_LO_BPM: f64 = 60.0;

/// Onset strength: half-wave-rectified frame-to-frame spectral flux of the
/// log-mel spectrogram. The first frame has no predecessor and reads 0.
pub(crate) fn onset_envelope(logmel: &Mat) -> Vec<f64> {
    let n_frames = logmel.cols();
    let mut env = vec![0.0f64; n_frames];
    for (t, e) in env.iter_mut().enumerate().skip(1) {
        let mut acc = 0.0;
        for m in 0..logmel.rows() {
            let d = logmel.get(m, t) - logmel.get(m, t - 1);
            if d > 0.0 {
                acc += d;
            }
        }
        *e = acc;
    }
    env
}

fn reflect_index(pos: isize, len: usize) -> usize {
    let period = 2 * (len as isize - 1);
    let mut p = pos.rem_euclid(period);
    if p >= len as isize {
        p = period - p;
    }
    p as usize
}

pub(crate) fn cyclic_tempogram_from(
    spec: &ComplexSpectrogram,
    cfg: &FeatureConfig,
) -> Result<FeatureMatrix> {
    if cfg.tempo_bins < 2 {
        return Err(Error::feature("tempogram", "n_tempo_bins must be >= 2"));
    }
    let logmel = mel_spectrogram_from(spec, cfg)?;
    let env = onset_envelope(&logmel.values);
    let n_frames = env.len();
    let window = cfg.tempo_window;
    if n_frames < window / 2 + 1 {
        return Err(Error::feature(
            "tempogram",
            format!("snippet of {n_frames} frames too short for a {window}-frame tempogram window"),
        ));
    }

    let frame_rate = spec.sample_rate as f64 / spec.hop as f64;
    let win = hann(window);
    let win_sum: f64 = win.iter().sum();

    // Eval frequencies per cyclic bin: center * 2^k inside [30, 480] BPM.
    let mut bin_freqs: Vec<Vec<f64>> = Vec::with_capacity(cfg.tempo_bins);
    for b in 0..cfg.tempo_bins {
        let center = CYCLE_LO_BPM * 2f64.powf(b as f64 / cfg.tempo_bins as f64);
        let mut freqs = Vec::new();
        let mut f = center;
        while f / 2.0 >= TEMPO_MIN_BPM {
            f /= 2.0;
        }
        while f <= TEMPO_MAX_BPM {
            freqs.push(f / 60.0); // BPM -> Hz
            f *= 2.0;
        }
        bin_freqs.push(freqs);
    }

    // Precompute per-frequency complex exponentials over the window.
    let dt = 1.0 / frame_rate;
    let all_freqs: Vec<f64> = bin_freqs.iter().flatten().cloned().collect();
    let mut tables: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(all_freqs.len());
    for &f in &all_freqs {
        let w = 2.0 * std::f64::consts::PI * f * dt;
        let cos: Vec<f64> = (0..window).map(|i| win[i] * (w * i as f64).cos()).collect();
        let sin: Vec<f64> = (0..window).map(|i| win[i] * (w * i as f64).sin()).collect();
        tables.push((cos, sin));
    }

    let half = window / 2;
    let mut out = Mat::zeros(cfg.tempo_bins, n_frames);
    let mut segment = vec![0.0f64; window];
    for t in 0..n_frames {
        let start = t as isize - half as isize;
        for (i, s) in segment.iter_mut().enumerate() {
            let pos = start + i as isize;
            *s = if pos >= 0 && (pos as usize) < n_frames {
                env[pos as usize]
            } else {
                env[reflect_index(pos, n_frames)]
            };
        }
        // Remove the window-weighted mean so a flat envelope does not leak
        // into the low-tempo bins.
        let mean = segment.iter().zip(&win).map(|(&s, &w)| s * w).sum::<f64>() / win_sum;
        let mut mags = Vec::with_capacity(all_freqs.len());
        for (cos, sin) in &tables {
            let mut re = 0.0;
            let mut im = 0.0;
            for i in 0..window {
                let v = segment[i] - mean;
                re += v * cos[i];
                im += v * sin[i];
            }
            mags.push((re * re + im * im).sqrt());
        }
        // Cyclic fold: sum each bin's octave set, then L2-normalize the frame.
        let mut idx = 0usize;
        let mut col = vec![0.0f64; cfg.tempo_bins];
        for (b, freqs) in bin_freqs.iter().enumerate() {
            for _ in freqs {
                col[b] += mags[idx];
                idx += 1;
            }
        }
        let norm: f64 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut col {
                *v /= norm;
            }
        }
        for (b, &v) in col.iter().enumerate() {
            out.set(b, t, v);
        }
    }

    let labels = (0..cfg.tempo_bins)
        .map(|b| {
            format!(
                "{:.1}bpm",
                CYCLE_LO_BPM * 2f64.powf(b as f64 / cfg.tempo_bins as f64)
            )
        })
        .collect();

    Ok(FeatureMatrix {
        name: "tempogram".to_string(),
        values: out,
        bin_labels: Some(labels),
        frame_hop_s: spec.hop as f64 / spec.sample_rate as f64,
    })
}

/// Cyclic tempogram over one tempo octave [60, 120) BPM with
/// `cfg.tempo_bins` log-spaced bins, L2-normalized per frame.
pub fn cyclic_tempogram(buf: &AudioBuffer, cfg: &FeatureConfig) -> Result<FeatureMatrix> {
    let spec = stft(buf, cfg.n_fft, cfg.hop)?;
    cyclic_tempogram_from(&spec, cfg)
}

/// Cyclic bin index whose center tempo is nearest to `bpm` folded into
/// [60, 120) BPM. Test helper for click-track checks.
pub fn cyclic_bin_of(bpm: f64, n_bins: usize) -> usize {
    let mut f = bpm;
    while f >= 2.0 * CYCLE_LO_BPM {
        f /= 2.0;
    }
    while f < CYCLE_LO_BPM {
        f *= 2.0;
    }
    let pos = n_bins as f64 * (f / CYCLE_LO_BPM).log2();
    (pos.round() as usize) % n_bins
}
