//! Deterministic signal generators: sines, click tracks, seeded noise.
//!
//! Used by the benchmark corpus, the CLI smoke paths, and tests. Everything
//! here is a pure function of its arguments.

use crate::audio_io::AudioBuffer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Pure sine tone.
pub fn sine(sample_rate: u32, dur_s: f64, freq_hz: f64, amp: f64, phase: f64) -> AudioBuffer {
    let n = (dur_s * sample_rate as f64).round() as usize;
    let w = 2.0 * std::f64::consts::PI * freq_hz / sample_rate as f64;
    let samples = (0..n).map(|i| amp * (w * i as f64 + phase).sin()).collect();
    AudioBuffer::new(samples, sample_rate, "sine")
}

/// Click track at a fixed tempo. Each click is a short decaying 3 kHz burst,
/// which gives the onset detector a clean broadband transient.
pub fn click_track(sample_rate: u32, dur_s: f64, bpm: f64, amp: f64) -> AudioBuffer {
    let n = (dur_s * sample_rate as f64).round() as usize;
    let mut samples = vec![0.0f64; n];
    let period = 60.0 / bpm * sample_rate as f64;
    let click_len = (0.010 * sample_rate as f64) as usize;
    let w = 2.0 * std::f64::consts::PI * 3000.0 / sample_rate as f64;
    let mut t = 0.0f64;
    while (t as usize) < n {
        let start = t as usize;
        for i in 0..click_len.min(n - start) {
            let env = (-(i as f64) / (0.002 * sample_rate as f64)).exp();
            samples[start + i] += amp * env * (w * i as f64).cos();
        }
        t += period;
    }
    AudioBuffer::new(samples, sample_rate, "clicks")
}

/// Seeded white noise, uniform in [-amp, amp].
pub fn white_noise(sample_rate: u32, dur_s: f64, amp: f64, seed: u64) -> AudioBuffer {
    let n = (dur_s * sample_rate as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n).map(|_| rng.gen_range(-amp..=amp)).collect();
    AudioBuffer::new(samples, sample_rate, "noise")
}

/// One-pole low-pass filter. `alpha` in (0, 1); closer to 1 means darker.
pub fn low_pass(buf: &AudioBuffer, alpha: f64) -> AudioBuffer {
    let mut out = Vec::with_capacity(buf.samples.len());
    let mut y = 0.0f64;
    for &x in &buf.samples {
        y = alpha * y + (1.0 - alpha) * x;
        out.push(y);
    }
    AudioBuffer::new(out, buf.sample_rate, &buf.source_id)
}

/// Sample-wise sum of buffers, clamped to [-1, 1]. All inputs must share the
/// sample rate; the output has the length of the longest input.
pub fn mix(parts: &[&AudioBuffer], source_id: &str) -> AudioBuffer {
    assert!(!parts.is_empty());
    let sr = parts[0].sample_rate;
    assert!(parts.iter().all(|p| p.sample_rate == sr));
    let n = parts.iter().map(|p| p.samples.len()).max().unwrap();
    let mut samples = vec![0.0f64; n];
    for p in parts {
        for (o, &s) in samples.iter_mut().zip(&p.samples) {
            *o += s;
        }
    }
    for s in &mut samples {
        *s = s.clamp(-1.0, 1.0);
    }
    AudioBuffer::new(samples, sr, source_id)
}
