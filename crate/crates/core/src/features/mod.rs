//! The six hyper-image constituents and their assembly into the normalized
//! network input.
//!
//! Plane order is a fixed contract: mel, MFCC, chroma, cyclic tempogram,
//! spectral contrast, tonnetz. With the default sizes the stack is
//! 128 + 20 + 12 + 32 + 7 + 6 = 205 rows.

pub mod chroma;
pub mod contrast;
pub mod melspec;
pub mod tempogram;
pub mod tonnetz;

pub use chroma::chromagram;
pub use contrast::spectral_contrast;
pub use melspec::{mel_spectrogram, mfcc, mfcc_from_mel_power};
pub use tempogram::{cyclic_bin_of, cyclic_tempogram};
pub use tonnetz::tonnetz;

use crate::audio_io::AudioBuffer;
use crate::dsp::{stft, FeatureMatrix};
use crate::error::{Error, Result};
use crate::mat::Mat;
use serde::{Deserialize, Serialize};

/// Everything that determines a feature plane's content apart from the
/// waveform itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub n_mfcc: usize,
    /// Cyclic tempogram bins over one tempo octave.
    pub tempo_bins: usize,
    /// Tempogram analysis window in envelope frames.
    pub tempo_window: usize,
    pub contrast_bands: usize,
    pub contrast_alpha: f64,
    pub mel_fmin: f64,
    /// Upper mel band edge; `None` means Nyquist.
    pub mel_fmax: Option<f64>,
    pub cqt_fmin: f64,
    pub cqt_bins_per_octave: usize,
    pub cqt_bins: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            n_fft: 2048,
            hop: 512,
            n_mels: 128,
            n_mfcc: 20,
            tempo_bins: 32,
            tempo_window: 128,
            contrast_bands: 6,
            contrast_alpha: 0.02,
            mel_fmin: 0.0,
            mel_fmax: None,
            cqt_fmin: 32.70319566257483, // C1
            cqt_bins_per_octave: 12,
            cqt_bins: 84,
        }
    }
}

impl FeatureConfig {
    /// Total hyper-image height under this configuration.
    pub fn stack_height(&self) -> usize {
        self.n_mels + self.n_mfcc + 12 + self.tempo_bins + self.contrast_bands + 1 + 6
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n_fft.is_power_of_two() {
            return Err(Error::Config("n_fft must be a power of two".into()));
        }
        if self.hop == 0 || self.hop > self.n_fft {
            return Err(Error::Config("hop must satisfy 0 < hop <= n_fft".into()));
        }
        if self.n_mels < 2 || self.n_mfcc > self.n_mels {
            return Err(Error::Config(
                "need n_mels >= 2 and n_mfcc <= n_mels".into(),
            ));
        }
        if self.tempo_bins < 2 || self.tempo_window < 4 {
            return Err(Error::Config(
                "need tempo_bins >= 2 and tempo_window >= 4".into(),
            ));
        }
        if self.contrast_bands < 1 {
            return Err(Error::Config("contrast_bands must be >= 1".into()));
        }
        if !(self.contrast_alpha > 0.0 && self.contrast_alpha <= 0.5) {
            return Err(Error::Config("contrast_alpha must be in (0, 0.5]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneInfo {
    pub name: String,
    pub rows: usize,
}

/// Per-plane standardization statistics recorded during assembly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: f64,
    pub std: f64,
}

/// Vertically stacked, per-plane standardized feature planes — the network
/// input. Constant planes standardize to all-zero and record `std = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperImage {
    pub planes: Vec<PlaneInfo>,
    pub pixels: Mat,
    pub norm_stats: Vec<NormStats>,
    pub source_id: Option<String>,
    pub label: Option<String>,
}

impl HyperImage {
    pub fn height(&self) -> usize {
        self.pixels.rows()
    }

    pub fn width(&self) -> usize {
        self.pixels.cols()
    }
}

/// Extract all six planes on a shared frame grid and stack them.
///
/// Each plane is standardized to zero mean and unit (population) standard
/// deviation over the whole plane; the statistics used are recorded in
/// `norm_stats`.
pub fn build_hyperimage(buf: &AudioBuffer, cfg: &FeatureConfig) -> Result<HyperImage> {
    cfg.validate()?;
    let spec = stft(buf, cfg.n_fft, cfg.hop).map_err(|e| tag("stft", e))?;

    let planes: Vec<FeatureMatrix> = vec![
        melspec::mel_spectrogram_from(&spec, cfg).map_err(|e| tag("mel", e))?,
        melspec::mfcc_from(&spec, cfg).map_err(|e| tag("mfcc", e))?,
        chroma::chromagram_from(&spec),
        tempogram::cyclic_tempogram_from(&spec, cfg)?,
        contrast::spectral_contrast_from(&spec, cfg.contrast_bands, cfg.contrast_alpha)?,
        tonnetz::tonnetz(&chroma::chromagram_from(&spec))?,
    ];

    let n_frames = spec.n_frames;
    for p in &planes {
        if p.n_frames() != n_frames {
            return Err(Error::Shape(format!(
                "plane `{}` has {} frames, expected {n_frames}",
                p.name,
                p.n_frames()
            )));
        }
        if !p.values.is_finite() {
            return Err(Error::feature(&p.name, "non-finite values"));
        }
    }

    let height: usize = planes.iter().map(|p| p.n_bins()).sum();
    let mut pixels = Mat::zeros(height, n_frames);
    let mut infos = Vec::with_capacity(planes.len());
    let mut stats = Vec::with_capacity(planes.len());
    let mut row0 = 0usize;
    for p in &planes {
        let mean = p.values.mean();
        let std = p.values.std();
        let scale = if std > 0.0 { 1.0 / std } else { 0.0 };
        for r in 0..p.n_bins() {
            let src = p.values.row(r);
            let dst = pixels.row_mut(row0 + r);
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = (s - mean) * scale;
            }
        }
        infos.push(PlaneInfo {
            name: p.name.clone(),
            rows: p.n_bins(),
        });
        stats.push(NormStats { mean, std });
        row0 += p.n_bins();
    }

    Ok(HyperImage {
        planes: infos,
        pixels,
        norm_stats: stats,
        source_id: Some(buf.source_id.clone()),
        label: None,
    })
}

fn tag(plane: &str, e: Error) -> Error {
    match e {
        Error::Feature { .. } => e,
        other => Error::feature(plane, other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{click_track, mix, sine};

    fn music_like(dur_s: f64) -> AudioBuffer {
        // 120 BPM sits exactly on a cyclic tempo bin center.
        let a = sine(22050, dur_s, 220.0, 0.3, 0.0);
        let b = sine(22050, dur_s, 523.25, 0.2, 0.5);
        let c = click_track(22050, dur_s, 120.0, 0.6);
        mix(&[&a, &b, &c], "music")
    }

    #[test]
    fn default_stack_is_205_by_216() {
        let buf = music_like(5.0);
        assert_eq!(buf.samples.len(), 110250);
        let hi = build_hyperimage(&buf, &FeatureConfig::default()).unwrap();
        // 1 + floor(110250 / 512) = 216 frames under reflection padding.
        assert_eq!(hi.height(), 205);
        assert_eq!(hi.width(), 216);
        let heights: Vec<usize> = hi.planes.iter().map(|p| p.rows).collect();
        assert_eq!(heights, vec![128, 20, 12, 32, 7, 6]);
        let names: Vec<&str> = hi.planes.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(
            names,
            vec!["mel", "mfcc", "chroma", "tempogram", "contrast", "tonnetz"]
        );
    }

    #[test]
    fn planes_are_standardized() {
        let buf = music_like(5.0);
        let hi = build_hyperimage(&buf, &FeatureConfig::default()).unwrap();
        let mut row0 = 0;
        for (plane, stats) in hi.planes.iter().zip(&hi.norm_stats) {
            let mut vals = Vec::new();
            for r in row0..row0 + plane.rows {
                vals.extend_from_slice(hi.pixels.row(r));
            }
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            if stats.std > 0.0 {
                assert!(mean.abs() < 1e-6, "plane {} mean {mean}", plane.name);
                assert!((var.sqrt() - 1.0).abs() < 1e-6, "plane {} std", plane.name);
            } else {
                assert!(vals.iter().all(|&v| v == 0.0));
            }
            row0 += plane.rows;
        }
    }

    #[test]
    fn extraction_is_deterministic() {
        let buf = music_like(5.0);
        let a = build_hyperimage(&buf, &FeatureConfig::default()).unwrap();
        let b = build_hyperimage(&buf, &FeatureConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn normalization_is_idempotent() {
        // Standardizing an already-standardized plane changes nothing
        // beyond 1e-6.
        let buf = music_like(5.0);
        let hi = build_hyperimage(&buf, &FeatureConfig::default()).unwrap();
        let mel_rows = hi.planes[0].rows;
        let mut vals = Vec::new();
        for r in 0..mel_rows {
            vals.extend_from_slice(hi.pixels.row(r));
        }
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let std = (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        for &v in &vals {
            let again = (v - mean) / std;
            assert!((again - v).abs() < 1e-6);
        }
    }

    #[test]
    fn gain_invariant_summaries() {
        // Scale down so doubling never clips.
        let base = music_like(5.0);
        let quiet = AudioBuffer::new(
            base.samples.iter().map(|s| s * 0.3).collect(),
            22050,
            "quiet",
        );
        let loud = AudioBuffer::new(
            base.samples.iter().map(|s| s * 0.6).collect(),
            22050,
            "loud",
        );
        let cfg = FeatureConfig::default();

        // Chroma argmax rows are unchanged by gain.
        let ca = chromagram(&quiet, &cfg).unwrap();
        let cb = chromagram(&loud, &cfg).unwrap();
        for t in 0..ca.n_frames() {
            let am = (0..12).max_by(|&x, &y| {
                ca.values
                    .get(x, t)
                    .partial_cmp(&ca.values.get(y, t))
                    .unwrap()
            });
            let bm = (0..12).max_by(|&x, &y| {
                cb.values
                    .get(x, t)
                    .partial_cmp(&cb.values.get(y, t))
                    .unwrap()
            });
            assert_eq!(am, bm, "frame {t}");
        }

        // Spectral contrast values are unchanged by gain (exact identity).
        let sa = spectral_contrast(&quiet, cfg.contrast_bands, cfg.contrast_alpha, &cfg).unwrap();
        let sb = spectral_contrast(&loud, cfg.contrast_bands, cfg.contrast_alpha, &cfg).unwrap();
        for (x, y) in sa.values.data().iter().zip(sb.values.data()) {
            assert!((x - y).abs() < 1e-9);
        }

        // Tempogram argmax bins are unchanged by gain.
        let ta = cyclic_tempogram(&quiet, &cfg).unwrap();
        let tb = cyclic_tempogram(&loud, &cfg).unwrap();
        for t in 0..ta.n_frames() {
            let am = (0..cfg.tempo_bins).max_by(|&x, &y| {
                ta.values
                    .get(x, t)
                    .partial_cmp(&ta.values.get(y, t))
                    .unwrap()
            });
            let bm = (0..cfg.tempo_bins).max_by(|&x, &y| {
                tb.values
                    .get(x, t)
                    .partial_cmp(&tb.values.get(y, t))
                    .unwrap()
            });
            assert_eq!(am, bm, "frame {t}");
        }
    }
}
