//! Chromagram: STFT power folded onto the 12 pitch classes.

use super::FeatureConfig;
use crate::audio_io::AudioBuffer;
use crate::dsp::{power_frames, stft, ComplexSpectrogram, FeatureMatrix};
use crate::error::Result;
use crate::mat::Mat;

pub const PITCH_CLASSES: [&str; 12] = [
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B",
];

/// Pitch class (C = 0) of the nearest equal-tempered semitone to `freq`,
/// under the MIDI mapping `440 * 2^((n - 69) / 12)`.
pub fn pitch_class_of(freq: f64) -> usize {
    let midi = 69.0 + 12.0 * (freq / 440.0).log2();
    (midi.round() as i64).rem_euclid(12) as usize
}

pub(crate) fn chromagram_from(spec: &ComplexSpectrogram) -> FeatureMatrix {
    let n_bins = spec.n_bins();
    let bin_hz = spec.sample_rate as f64 / spec.n_fft as f64;

    // Bin 0 is DC and has no pitch class.
    let class_of: Vec<Option<usize>> = (0..n_bins)
        .map(|k| {
            let f = k as f64 * bin_hz;
            (f > 0.0).then(|| pitch_class_of(f))
        })
        .collect();

    let p = power_frames(spec);
    let mut out = Mat::zeros(12, spec.n_frames);
    for t in 0..spec.n_frames {
        let frame = p.row(t);
        let mut acc = [0.0f64; 12];
        for (k, &v) in frame.iter().enumerate() {
            if let Some(c) = class_of[k] {
                acc[c] += v;
            }
        }
        // Per-frame max normalization to [0, 1]; zero frames stay zero.
        let max = acc.iter().cloned().fold(0.0f64, f64::max);
        if max > 0.0 {
            for a in &mut acc {
                *a /= max;
            }
        }
        for (c, &a) in acc.iter().enumerate() {
            out.set(c, t, a);
        }
    }

    FeatureMatrix {
        name: "chroma".to_string(),
        values: out,
        bin_labels: Some(PITCH_CLASSES.iter().map(|s| s.to_string()).collect()),
        frame_hop_s: spec.hop as f64 / spec.sample_rate as f64,
    }
}

/// 12-row chromagram: each STFT bin's power accumulated onto the pitch class
/// of its center frequency, max-normalized per frame.
pub fn chromagram(buf: &AudioBuffer, cfg: &FeatureConfig) -> Result<FeatureMatrix> {
    let spec = stft(buf, cfg.n_fft, cfg.hop)?;
    Ok(chromagram_from(&spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::sine;

    const A: usize = 9;

    fn argmax_col(m: &Mat, t: usize) -> usize {
        (0..m.rows())
            .max_by(|&a, &b| m.get(a, t).partial_cmp(&m.get(b, t)).unwrap())
            .unwrap()
    }

    #[test]
    fn a440_peaks_in_row_a() {
        let buf = sine(22050, 1.0, 440.0, 0.8, 0.0);
        let c = chromagram(&buf, &FeatureConfig::default()).unwrap();
        let frames = c.n_frames();
        let hits = (0..frames)
            .filter(|&t| argmax_col(&c.values, t) == A)
            .count();
        assert!(hits as f64 >= 0.95 * frames as f64, "{hits}/{frames}");
    }

    #[test]
    fn octave_equivalence_holds() {
        let buf = sine(22050, 1.0, 880.0, 0.8, 0.0);
        let c = chromagram(&buf, &FeatureConfig::default()).unwrap();
        let t = c.n_frames() / 2;
        assert_eq!(argmax_col(&c.values, t), A);
    }

    #[test]
    fn silence_stays_zero() {
        let buf = AudioBuffer::new(vec![0.0; 22050], 22050, "z");
        let c = chromagram(&buf, &FeatureConfig::default()).unwrap();
        assert!(c.values.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gain_does_not_move_the_argmax() {
        let quiet = sine(22050, 0.5, 523.25, 0.2, 0.0); // C5
        let loud = sine(22050, 0.5, 523.25, 0.4, 0.0);
        let a = chromagram(&quiet, &FeatureConfig::default()).unwrap();
        let b = chromagram(&loud, &FeatureConfig::default()).unwrap();
        for t in 0..a.n_frames() {
            assert_eq!(argmax_col(&a.values, t), argmax_col(&b.values, t));
        }
    }

    #[test]
    fn pitch_class_mapping() {
        assert_eq!(pitch_class_of(440.0), A);
        assert_eq!(pitch_class_of(261.6256), 0); // C4
        assert_eq!(pitch_class_of(880.0), A);
    }
}
