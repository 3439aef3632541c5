//! Audio decoding and conditioning: RIFF/WAVE parsing, channel folding,
//! resampling, and snippet slicing, plus the dataset manifest format.
//!
//! Lossy codecs are deliberately out of scope; decode mp3 and friends to WAV
//! with an external tool (e.g. `ffmpeg -i song.mp3 song.wav`) before feeding
//! files to this pipeline.

use crate::error::{Error, Result, WavError};
use std::path::Path;

/// Mono waveform with its sample rate. Samples are finite and within
/// [-1, 1] after decode normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    /// Opaque name of the originating file or generator.
    pub source_id: String,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32, source_id: &str) -> Self {
        assert!(sample_rate > 0, "sample_rate must be positive");
        assert!(
            !samples.is_empty(),
            "AudioBuffer must hold at least one sample"
        );
        AudioBuffer {
            samples,
            sample_rate,
            source_id: source_id.to_string(),
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

// ---------------------------------------------------------------------------
// WAV decode / encode
// ---------------------------------------------------------------------------

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

struct FmtChunk {
    format_tag: u16,
    channels: u16,
    sample_rate: u32,
    bits_per_sample: u16,
}

fn read_u16(bytes: &[u8], pos: usize) -> std::result::Result<u16, WavError> {
    bytes
        .get(pos..pos + 2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .ok_or_else(|| WavError::MalformedHeader(format!("unexpected end of file at offset {pos}")))
}

fn read_u32(bytes: &[u8], pos: usize) -> std::result::Result<u32, WavError> {
    bytes
        .get(pos..pos + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| WavError::MalformedHeader(format!("unexpected end of file at offset {pos}")))
}

/// Decode a RIFF/WAVE byte stream into a mono [`AudioBuffer`].
///
/// Accepts 16-bit and 32-bit integer PCM and 32-bit IEEE float, any channel
/// count. Multi-channel audio is averaged to mono; integer PCM is scaled to
/// [-1, 1] by the type's max magnitude.
pub fn decode_wav(bytes: &[u8], source_id: &str) -> Result<AudioBuffer> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(WavError::MalformedHeader("missing RIFF/WAVE magic".into()).into());
    }

    let mut pos = 12usize;
    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<(usize, usize)> = None; // (offset, len)

    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = read_u32(bytes, pos + 4)? as usize;
        let body = pos + 8;
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(WavError::MalformedHeader(format!(
                        "fmt chunk too small ({size} bytes)"
                    ))
                    .into());
                }
                let mut format_tag = read_u16(bytes, body)?;
                let channels = read_u16(bytes, body + 2)?;
                let sample_rate = read_u32(bytes, body + 4)?;
                let bits_per_sample = read_u16(bytes, body + 14)?;
                if format_tag == FORMAT_EXTENSIBLE {
                    // Sub-format GUID starts with the effective format tag.
                    if size >= 40 {
                        format_tag = read_u16(bytes, body + 24)?;
                    } else {
                        return Err(WavError::MalformedHeader(
                            "extensible fmt chunk without sub-format".into(),
                        )
                        .into());
                    }
                }
                if channels == 0 {
                    return Err(WavError::MalformedHeader("zero channels".into()).into());
                }
                if sample_rate == 0 {
                    return Err(WavError::MalformedHeader("zero sample rate".into()).into());
                }
                fmt = Some(FmtChunk {
                    format_tag,
                    channels,
                    sample_rate,
                    bits_per_sample,
                });
            }
            b"data" => {
                let available = bytes.len().saturating_sub(body);
                if size > available {
                    return Err(WavError::TruncatedData {
                        declared: size,
                        available,
                    }
                    .into());
                }
                data = Some((body, size));
            }
            _ => {} // skip LIST, fact, cue, ...
        }
        // Chunks are word-aligned: odd sizes carry a pad byte.
        pos = body + size + (size & 1);
    }

    let fmt = fmt.ok_or_else(|| WavError::MalformedHeader("missing fmt chunk".into()))?;
    let (data_off, data_len) =
        data.ok_or_else(|| WavError::MalformedHeader("missing data chunk".into()))?;

    let bytes_per_sample = match (fmt.format_tag, fmt.bits_per_sample) {
        (FORMAT_PCM, 16) => 2,
        (FORMAT_PCM, 32) => 4,
        (FORMAT_IEEE_FLOAT, 32) => 4,
        (tag, bits) => {
            return Err(WavError::UnsupportedCodec {
                format_tag: tag,
                bits,
            }
            .into())
        }
    };

    let frame_bytes = bytes_per_sample * fmt.channels as usize;
    let n_frames = data_len / frame_bytes;
    if n_frames == 0 {
        return Err(WavError::TruncatedData {
            declared: frame_bytes,
            available: data_len,
        }
        .into());
    }

    let mut samples = Vec::with_capacity(n_frames);
    let inv_channels = 1.0 / fmt.channels as f64;
    for frame in 0..n_frames {
        let mut acc = 0.0f64;
        for ch in 0..fmt.channels as usize {
            let off = data_off + frame * frame_bytes + ch * bytes_per_sample;
            let v = match (fmt.format_tag, fmt.bits_per_sample) {
                (FORMAT_PCM, 16) => {
                    i16::from_le_bytes([bytes[off], bytes[off + 1]]) as f64 / 32768.0
                }
                (FORMAT_PCM, 32) => {
                    i32::from_le_bytes([bytes[off], bytes[off + 1], bytes[off + 2], bytes[off + 3]])
                        as f64
                        / 2147483648.0
                }
                (FORMAT_IEEE_FLOAT, 32) => {
                    f32::from_le_bytes([bytes[off], bytes[off + 1], bytes[off + 2], bytes[off + 3]])
                        as f64
                }
                _ => unreachable!(),
            };
            acc += v;
        }
        samples.push((acc * inv_channels).clamp(-1.0, 1.0));
    }

    Ok(AudioBuffer::new(samples, fmt.sample_rate, source_id))
}

pub fn decode_wav_file(path: &Path) -> Result<AudioBuffer> {
    let bytes = std::fs::read(path)?;
    decode_wav(&bytes, &path.to_string_lossy())
}

fn wav_header(out: &mut Vec<u8>, format_tag: u16, sample_rate: u32, bits: u16, data_len: u32) {
    let block_align = (bits / 8) as u32; // mono
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&format_tag.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * block_align).to_le_bytes());
    out.extend_from_slice(&(block_align as u16).to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
}

/// Encode as mono 32-bit float WAV. Round trips bit-exactly through
/// [`decode_wav`] for in-range samples.
pub fn encode_wav_f32(buf: &AudioBuffer) -> Vec<u8> {
    let data_len = (buf.samples.len() * 4) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    wav_header(&mut out, FORMAT_IEEE_FLOAT, buf.sample_rate, 32, data_len);
    for &s in &buf.samples {
        out.extend_from_slice(&(s as f32).to_le_bytes());
    }
    out
}

/// Encode as mono 16-bit PCM WAV (samples scaled by 32768, clamped).
pub fn encode_wav_pcm16(buf: &AudioBuffer) -> Vec<u8> {
    let data_len = (buf.samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    wav_header(&mut out, FORMAT_PCM, buf.sample_rate, 16, data_len);
    for &s in &buf.samples {
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}

pub fn write_wav_f32(path: &Path, buf: &AudioBuffer) -> Result<()> {
    std::fs::write(path, encode_wav_f32(buf))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Resampling and slicing
// ---------------------------------------------------------------------------

/// Linear-interpolation resampler. Preserves duration to within one sample
/// period. Adequate for features dominated by sub-8 kHz energy; swap in a
/// windowed-sinc kernel here if aliasing ever matters.
pub fn resample(buf: &AudioBuffer, target_rate: u32) -> Result<AudioBuffer> {
    if target_rate == 0 {
        return Err(Error::Config("target sample rate must be positive".into()));
    }
    if target_rate == buf.sample_rate {
        return Ok(buf.clone());
    }
    let src = &buf.samples;
    let ratio = buf.sample_rate as f64 / target_rate as f64;
    let out_len = ((src.len() as f64 / ratio).round() as usize).max(1);
    let mut out = Vec::with_capacity(out_len);
    for n in 0..out_len {
        let t = n as f64 * ratio;
        let i = t.floor() as usize;
        if i + 1 < src.len() {
            let frac = t - i as f64;
            out.push(src[i] * (1.0 - frac) + src[i + 1] * frac);
        } else {
            out.push(src[src.len() - 1]);
        }
    }
    Ok(AudioBuffer::new(out, target_rate, &buf.source_id))
}

/// Exact contiguous slice of `dur_s` seconds starting at `start_s`.
pub fn snippet(buf: &AudioBuffer, start_s: f64, dur_s: f64) -> Result<AudioBuffer> {
    if start_s < 0.0 || dur_s <= 0.0 {
        return Err(Error::Data(format!(
            "snippet window [{start_s}, {start_s}+{dur_s}) is not a valid range"
        )));
    }
    let start = (start_s * buf.sample_rate as f64).round() as usize;
    let len = (dur_s * buf.sample_rate as f64).round() as usize;
    if start + len > buf.samples.len() {
        return Err(Error::Data(format!(
            "snippet [{start_s} s, +{dur_s} s) exceeds buffer of {:.3} s",
            buf.duration_s()
        )));
    }
    Ok(AudioBuffer::new(
        buf.samples[start..start + len].to_vec(),
        buf.sample_rate,
        &buf.source_id,
    ))
}

// ---------------------------------------------------------------------------
// Dataset manifest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub path: String,
    pub label: String,
    pub song_id: String,
}

/// Corpus listing: one row per song, plus the ordered class list derived
/// from the labels (sorted, deduplicated).
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub classes: Vec<String>,
}

impl DatasetManifest {
    /// Parse the CSV form: header `path,label,song_id`, UTF-8, comma
    /// separated, no quoting.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Manifest("empty file".into()))?
            .trim_end_matches('\r');
        if header != "path,label,song_id" {
            return Err(Error::Manifest(format!(
                "expected header `path,label,song_id`, got `{header}`"
            )));
        }
        let mut entries = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Manifest(format!(
                    "row {}: expected 3 fields, got {}",
                    i + 2,
                    fields.len()
                )));
            }
            if fields.iter().any(|f| f.is_empty()) {
                return Err(Error::Manifest(format!("row {}: empty field", i + 2)));
            }
            entries.push(ManifestEntry {
                path: fields[0].to_string(),
                label: fields[1].to_string(),
                song_id: fields[2].to_string(),
            });
        }
        let mut classes: Vec<String> = entries.iter().map(|e| e.label.clone()).collect();
        classes.sort();
        classes.dedup();
        Ok(DatasetManifest { entries, classes })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("path,label,song_id\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{}\n", e.path, e.label, e.song_id));
        }
        out
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }
}

/// Canonical snippet id: groups all snippets of one song under its song_id.
pub fn snippet_id(song_id: &str, index: usize) -> String {
    format!("{song_id}__s{index:02}")
}

/// Evenly spaced snippet start times covering the buffer.
pub fn snippet_starts(duration_s: f64, snippet_s: f64, count: usize) -> Vec<f64> {
    if count == 0 || duration_s < snippet_s {
        return Vec::new();
    }
    if count == 1 {
        return vec![0.0];
    }
    let span = duration_s - snippet_s;
    (0..count)
        .map(|i| span * i as f64 / (count - 1) as f64)
        .collect()
}
