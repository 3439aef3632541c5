//! Short-time Fourier transform with reflection padding.

use super::fft::fft;
use super::{ComplexSpectrogram, FeatureMatrix};
use crate::audio_io::AudioBuffer;
use crate::error::{Error, Result};
use crate::mat::Mat;
use num_complex::Complex64;

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()))
        .collect()
}

/// Sample with mirror ("bounce") indexing, so positions outside `[0, len)`
/// reflect back into range without repeating the edge sample.
fn reflect_index(pos: isize, len: usize) -> usize {
    debug_assert!(len >= 2);
    let period = 2 * (len as isize - 1);
    let mut p = pos.rem_euclid(period);
    if p >= len as isize {
        p = period - p;
    }
    p as usize
}

/// Frame count shared by every feature plane: with `n_fft/2` reflection
/// padding on both ends, `n_frames = 1 + floor(len / hop)`.
pub fn frame_count(len: usize, hop: usize) -> usize {
    1 + len / hop
}

/// Windowed STFT keeping the positive-frequency half (`n_fft/2 + 1` bins).
///
/// The signal is reflection-padded by `n_fft/2` on both ends so frame `t`
/// is centered on sample `t * hop` of the original signal and every plane
/// derived from one buffer shares the same frame grid.
pub fn stft(buf: &AudioBuffer, n_fft: usize, hop: usize) -> Result<ComplexSpectrogram> {
    if !n_fft.is_power_of_two() {
        return Err(Error::Dsp(format!(
            "n_fft must be a power of two, got {n_fft}"
        )));
    }
    if hop == 0 || hop > n_fft {
        return Err(Error::Dsp(format!(
            "hop must satisfy 0 < hop <= n_fft, got {hop}"
        )));
    }
    let len = buf.samples.len();
    if len < 2 {
        return Err(Error::Dsp(
            "buffer too short for one frame under reflection padding".into(),
        ));
    }

    let window = hann(n_fft);
    let pad = n_fft / 2;
    let n_frames = frame_count(len, hop);
    let n_bins = n_fft / 2 + 1;

    let mut frames = Vec::with_capacity(n_frames * n_bins);
    let mut buf_c = vec![Complex64::new(0.0, 0.0); n_fft];
    for t in 0..n_frames {
        let start = t as isize * hop as isize - pad as isize;
        for (i, w) in window.iter().enumerate() {
            let pos = start + i as isize;
            let s = if pos >= 0 && (pos as usize) < len {
                buf.samples[pos as usize]
            } else {
                buf.samples[reflect_index(pos, len)]
            };
            buf_c[i] = Complex64::new(s * w, 0.0);
        }
        let spec = fft(&buf_c, false)?;
        frames.extend_from_slice(&spec[..n_bins]);
    }

    Ok(ComplexSpectrogram {
        bins: frames,
        n_fft,
        hop,
        n_frames,
        sample_rate: buf.sample_rate,
        window: "hann".to_string(),
    })
}

/// Magnitude-squared spectrogram, bins as rows and frames as columns.
pub fn power(spec: &ComplexSpectrogram) -> FeatureMatrix {
    let n_bins = spec.n_bins();
    let mut m = Mat::zeros(n_bins, spec.n_frames);
    for t in 0..spec.n_frames {
        let frame = spec.frame(t);
        for (k, v) in frame.iter().enumerate() {
            m.set(k, t, v.norm_sqr());
        }
    }
    FeatureMatrix {
        name: "power".to_string(),
        values: m,
        bin_labels: None,
        frame_hop_s: spec.hop as f64 / spec.sample_rate as f64,
    }
}

/// Magnitude-squared spectrum per frame, frames as rows (frame-major), which
/// keeps the hot loops of the mel/chroma/contrast extractors contiguous.
pub fn power_frames(spec: &ComplexSpectrogram) -> Mat {
    let n_bins = spec.n_bins();
    let mut m = Mat::zeros(spec.n_frames, n_bins);
    for t in 0..spec.n_frames {
        let row = m.row_mut(t);
        for (k, v) in spec.frame(t).iter().enumerate() {
            row[k] = v.norm_sqr();
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::sine;

    #[test]
    fn zero_buffer_gives_zero_spectrogram() {
        let buf = AudioBuffer::new(vec![0.0; 4096], 22050, "z");
        let spec = stft(&buf, 1024, 256).unwrap();
        assert!(spec.bins.iter().all(|v| v.norm() == 0.0));
        assert_eq!(spec.n_frames, frame_count(4096, 256));
        assert_eq!(spec.n_bins(), 513);
    }

    #[test]
    fn sine_at_bin_center_peaks_at_that_bin() {
        // Bin k center frequency is k * sr / n_fft. Pick k = 64.
        let sr = 22050u32;
        let n_fft = 1024;
        let k = 64usize;
        let f = k as f64 * sr as f64 / n_fft as f64;
        let buf = sine(sr, 1.0, f, 0.9, 0.0);
        let spec = stft(&buf, n_fft, 256).unwrap();
        // Interior frames only: edge frames mix in the reflected signal,
        // whose kink spreads energy broadly.
        let pad_frames = n_fft / 256 / 2 + 1;
        for t in pad_frames..spec.n_frames - pad_frames {
            let frame = spec.frame(t);
            let argmax = (0..frame.len())
                .max_by(|&a, &b| frame[a].norm().partial_cmp(&frame[b].norm()).unwrap())
                .unwrap();
            assert_eq!(argmax, k, "frame {t}");
        }
    }

    #[test]
    fn per_frame_parseval_holds() {
        // For a real windowed frame xw:
        //   sum_n xw[n]^2 == (1/N) * (|X[0]|^2 + |X[N/2]|^2 + 2*sum_{0<k<N/2} |X[k]|^2)
        let sr = 22050u32;
        let n_fft = 512usize;
        let buf = sine(sr, 0.5, 997.0, 0.7, 0.3);
        let spec = stft(&buf, n_fft, 128).unwrap();
        let window = hann(n_fft);
        let pad = n_fft / 2;

        for t in [0usize, 3, 7] {
            let start = t as isize * 128 - pad as isize;
            let mut time_energy = 0.0;
            for (i, w) in window.iter().enumerate() {
                let pos = start + i as isize;
                let s = if pos >= 0 && (pos as usize) < buf.samples.len() {
                    buf.samples[pos as usize]
                } else {
                    buf.samples[reflect_index(pos, buf.samples.len())]
                };
                time_energy += (s * w) * (s * w);
            }
            let frame = spec.frame(t);
            let mut freq_energy = frame[0].norm_sqr() + frame[n_fft / 2].norm_sqr();
            for v in &frame[1..n_fft / 2] {
                freq_energy += 2.0 * v.norm_sqr();
            }
            freq_energy /= n_fft as f64;
            assert!(
                (time_energy - freq_energy).abs() < 1e-9 * time_energy.max(1.0),
                "frame {t}: {time_energy} vs {freq_energy}"
            );
        }
    }

    #[test]
    fn hop_shift_shifts_interior_frames() {
        let sr = 22050u32;
        let hop = 256usize;
        let base = crate::signal::white_noise(sr, 1.0, 0.5, 11);
        // Shift the signal left by one hop.
        let shifted = AudioBuffer::new(base.samples[hop..].to_vec(), sr, "s");
        let a = stft(&base, 1024, hop).unwrap();
        let b = stft(&shifted, 1024, hop).unwrap();
        // Interior frame t of `shifted` equals frame t+1 of `base`.
        for t in 3..b.n_frames.min(a.n_frames) - 3 {
            let fa = a.frame(t + 1);
            let fb = b.frame(t);
            let diff = fa
                .iter()
                .zip(fb)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(diff < 1e-9, "frame {t}: diff {diff}");
        }
    }

    #[test]
    fn power_is_magnitude_squared_and_phase_invariant() {
        let spec = ComplexSpectrogram {
            bins: vec![Complex64::new(3.0, 4.0)],
            n_fft: 0,
            hop: 1,
            n_frames: 1,
            sample_rate: 1,
            window: "hann".into(),
        };
        let p = power(&spec);
        assert!((p.values.get(0, 0) - 25.0).abs() < 1e-12);

        let rotated = ComplexSpectrogram {
            bins: vec![Complex64::new(3.0, 4.0) * Complex64::from_polar(1.0, 1.234)],
            ..spec
        };
        let pr = power(&rotated);
        assert!((pr.values.get(0, 0) - 25.0).abs() < 1e-9);
    }

    #[test]
    fn short_buffer_is_rejected() {
        let buf = AudioBuffer::new(vec![0.5], 22050, "one");
        assert!(stft(&buf, 1024, 256).is_err());
    }
}
