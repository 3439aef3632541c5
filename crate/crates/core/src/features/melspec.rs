//! Mel spectrogram and MFCC planes.

use super::FeatureConfig;
use crate::audio_io::AudioBuffer;
use crate::dsp::{dct_ii, mel_filterbank, power_frames, stft, ComplexSpectrogram, FeatureMatrix};
use crate::error::Result;
use crate::mat::Mat;

/// Floor added to mel powers before the MFCC log so silence stays finite.
pub const MFCC_LOG_FLOOR: f64 = 1e-10;

/// Mel-band power per frame: `filterbank . power(stft)`, returned with
/// mel bands as rows and frames as columns (no compression applied).
pub(crate) fn mel_power(spec: &ComplexSpectrogram, cfg: &FeatureConfig) -> Result<Mat> {
    let fmax = cfg.mel_fmax.unwrap_or(spec.sample_rate as f64 / 2.0);
    let fb = mel_filterbank(spec.n_fft, cfg.n_mels, spec.sample_rate, cfg.mel_fmin, fmax)?;
    let p = power_frames(spec); // frames x bins
    let mut out = Mat::zeros(cfg.n_mels, spec.n_frames);
    for t in 0..spec.n_frames {
        let frame = p.row(t);
        for m in 0..cfg.n_mels {
            let acc: f64 = fb.row(m).iter().zip(frame).map(|(&w, &x)| w * x).sum();
            out.set(m, t, acc);
        }
    }
    Ok(out)
}

pub(crate) fn mel_spectrogram_from(
    spec: &ComplexSpectrogram,
    cfg: &FeatureConfig,
) -> Result<FeatureMatrix> {
    let mut mp = mel_power(spec, cfg)?;
    for v in mp.data_mut() {
        *v = v.ln_1p();
    }
    Ok(FeatureMatrix {
        name: "mel".to_string(),
        values: mp,
        bin_labels: None,
        frame_hop_s: spec.hop as f64 / spec.sample_rate as f64,
    })
}

/// Log-compressed mel spectrogram: `log(1 + filterbank . power)`.
pub fn mel_spectrogram(buf: &AudioBuffer, cfg: &FeatureConfig) -> Result<FeatureMatrix> {
    let spec = stft(buf, cfg.n_fft, cfg.hop)?;
    mel_spectrogram_from(&spec, cfg)
}

/// MFCC core: orthonormal DCT-II over `log(mel_power + floor)`, first
/// `n_mfcc` coefficients. Exposed separately so a constant-mel frame can be
/// checked directly against the DC-only property.
pub fn mfcc_from_mel_power(mel_power: &Mat, n_mfcc: usize) -> Result<Mat> {
    let mut logged = mel_power.clone();
    for v in logged.data_mut() {
        *v = (*v + MFCC_LOG_FLOOR).ln();
    }
    dct_ii(&logged, n_mfcc)
}

pub(crate) fn mfcc_from(spec: &ComplexSpectrogram, cfg: &FeatureConfig) -> Result<FeatureMatrix> {
    let mp = mel_power(spec, cfg)?;
    let coeffs = mfcc_from_mel_power(&mp, cfg.n_mfcc)?;
    Ok(FeatureMatrix {
        name: "mfcc".to_string(),
        values: coeffs,
        bin_labels: None,
        frame_hop_s: spec.hop as f64 / spec.sample_rate as f64,
    })
}

/// Mel-frequency cepstral coefficients.
pub fn mfcc(buf: &AudioBuffer, cfg: &FeatureConfig) -> Result<FeatureMatrix> {
    let spec = stft(buf, cfg.n_fft, cfg.hop)?;
    mfcc_from(&spec, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::sine;

    #[test]
    fn silence_gives_zero_mel_rows() {
        let buf = AudioBuffer::new(vec![0.0; 22050], 22050, "z");
        let m = mel_spectrogram(&buf, &FeatureConfig::default()).unwrap();
        assert!(m.values.data().iter().all(|&v| v == 0.0));
        assert_eq!(m.n_bins(), 128);
    }

    #[test]
    fn sine_peaks_at_nearest_mel_filter() {
        let cfg = FeatureConfig::default();
        let buf = sine(22050, 1.0, 1000.0, 0.8, 0.0);
        let m = mel_spectrogram(&buf, &cfg).unwrap();

        // Which filter's peak is nearest 1000 Hz?
        let fb = mel_filterbank(cfg.n_fft, cfg.n_mels, 22050, cfg.mel_fmin, 11025.0).unwrap();
        let bin_hz = 22050.0 / cfg.n_fft as f64;
        let expected = (0..cfg.n_mels)
            .min_by(|&a, &b| {
                let pa = fb
                    .row(a)
                    .iter()
                    .enumerate()
                    .max_by(|x, y| x.1.partial_cmp(y.1).unwrap())
                    .unwrap()
                    .0;
                let pb = fb
                    .row(b)
                    .iter()
                    .enumerate()
                    .max_by(|x, y| x.1.partial_cmp(y.1).unwrap())
                    .unwrap()
                    .0;
                let da = (pa as f64 * bin_hz - 1000.0).abs();
                let db = (pb as f64 * bin_hz - 1000.0).abs();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();

        let t = m.n_frames() / 2;
        let argmax = (0..m.n_bins())
            .max_by(|&a, &b| m.values.get(a, t).partial_cmp(&m.values.get(b, t)).unwrap())
            .unwrap();
        assert!(
            (argmax as isize - expected as isize).abs() <= 1,
            "argmax {argmax}, expected near {expected}"
        );
    }

    #[test]
    fn doubling_amplitude_raises_every_nonzero_cell() {
        let cfg = FeatureConfig::default();
        let quiet = sine(22050, 0.5, 500.0, 0.3, 0.0);
        let loud = sine(22050, 0.5, 500.0, 0.6, 0.0);
        let a = mel_spectrogram(&quiet, &cfg).unwrap();
        let b = mel_spectrogram(&loud, &cfg).unwrap();
        for (x, y) in a.values.data().iter().zip(b.values.data()) {
            if *x > 0.0 {
                assert!(y > x);
            }
        }
    }

    #[test]
    fn constant_mel_frame_is_dc_only() {
        let mp = Mat::from_vec(8, 3, vec![0.37; 24]);
        let c = mfcc_from_mel_power(&mp, 8).unwrap();
        for k in 1..8 {
            for t in 0..3 {
                assert!(c.get(k, t).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn silence_mfcc_is_finite() {
        let buf = AudioBuffer::new(vec![0.0; 22050], 22050, "z");
        let c = mfcc(&buf, &FeatureConfig::default()).unwrap();
        assert!(c.values.is_finite());
        assert_eq!(c.n_bins(), 20);
    }

    #[test]
    fn matches_independent_reference_pipeline() {
        // Golden values from an independent Python/numpy implementation of the
        // same documented pipeline (periodic Hann, reflection padding, mel
        // 2595/700 triangles, log + 1e-10 floor, orthonormal DCT-II) applied
        // to sine(22050 Hz, 0.25 s, 997.3 Hz, amp 0.7), frame 5, n_mels 40,
        // n_mfcc 8, n_fft 1024, hop 256.
        let cfg = FeatureConfig {
            n_fft: 1024,
            hop: 256,
            n_mels: 40,
            n_mfcc: 8,
            ..FeatureConfig::default()
        };
        let buf = sine(22050, 0.25, 997.3, 0.7, 0.0);
        let c = mfcc(&buf, &cfg).unwrap();
        let golden: [f64; 8] = [
            -86.1206784215,
            37.4110020388,
            -15.9469623751,
            -22.1806745296,
            -13.4309037768,
            1.7669503112,
            10.8692510269,
            9.1040022704,
        ];
        for (k, &g) in golden.iter().enumerate() {
            let got = c.values.get(k, 5);
            assert!(
                (got - g).abs() < 1e-6 * g.abs().max(1.0),
                "coefficient {k}: {got} vs {g}"
            );
        }
    }
}
