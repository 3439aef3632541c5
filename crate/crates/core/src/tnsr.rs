//! TNSR / TNSC binary tensor formats.
//!
//! TNSR record: magic `TNSR`, format version (u32 LE), rank (u32 LE),
//! `rank` dims (u64 LE each), then the data as f32 LE in row-major order.
//!
//! TNSC container: magic `TNSC`, count (u32 LE), then `count` repetitions of
//! (name length u32 LE, UTF-8 name, TNSR record).

use crate::error::{Error, Result};
use std::path::Path;

pub const TNSR_VERSION: u32 = 1;

/// One container entry: name, dims, row-major values.
pub type NamedTensor = (String, Vec<usize>, Vec<f64>);

/// Serialize one tensor record.
pub fn encode_tnsr(dims: &[usize], data: &[f64]) -> Vec<u8> {
    let n: usize = dims.iter().product();
    assert_eq!(n, data.len(), "dims/data mismatch");
    let mut out = Vec::with_capacity(16 + dims.len() * 8 + data.len() * 4);
    out.extend_from_slice(b"TNSR");
    out.extend_from_slice(&TNSR_VERSION.to_le_bytes());
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &d in dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for &v in data {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

fn take<'a>(bytes: &'a [u8], pos: &mut usize, n: usize, what: &str) -> Result<&'a [u8]> {
    let slice = bytes
        .get(*pos..*pos + n)
        .ok_or_else(|| Error::TensorFormat(format!("truncated {what} at offset {}", *pos)))?;
    *pos += n;
    Ok(slice)
}

fn read_u32(bytes: &[u8], pos: &mut usize, what: &str) -> Result<u32> {
    let b = take(bytes, pos, 4, what)?;
    Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
}

fn decode_tnsr_at(bytes: &[u8], pos: &mut usize) -> Result<(Vec<usize>, Vec<f64>)> {
    let magic = take(bytes, pos, 4, "TNSR magic")?;
    if magic != b"TNSR" {
        return Err(Error::TensorFormat("bad TNSR magic".into()));
    }
    let version = read_u32(bytes, pos, "TNSR version")?;
    if version != TNSR_VERSION {
        return Err(Error::TensorFormat(format!(
            "unsupported TNSR version {version}"
        )));
    }
    let rank = read_u32(bytes, pos, "TNSR rank")? as usize;
    let mut dims = Vec::with_capacity(rank);
    for _ in 0..rank {
        let b = take(bytes, pos, 8, "TNSR dim")?;
        dims.push(u64::from_le_bytes([b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]]) as usize);
    }
    let n: usize = dims.iter().product();
    let raw = take(bytes, pos, n * 4, "TNSR data")?;
    let data = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok((dims, data))
}

/// Parse one tensor record; the whole buffer must be consumed.
pub fn decode_tnsr(bytes: &[u8]) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut pos = 0usize;
    let out = decode_tnsr_at(bytes, &mut pos)?;
    if pos != bytes.len() {
        return Err(Error::TensorFormat(format!(
            "{} trailing bytes after TNSR record",
            bytes.len() - pos
        )));
    }
    Ok(out)
}

/// Serialize a named-tensor container.
pub fn encode_tnsc(entries: &[NamedTensor]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(b"TNSC");
    out.extend_from_slice(&(entries.len() as u32).to_le_bytes());
    for (name, dims, data) in entries {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&encode_tnsr(dims, data));
    }
    out
}

/// Parse a named-tensor container, preserving entry order.
pub fn decode_tnsc(bytes: &[u8]) -> Result<Vec<NamedTensor>> {
    let mut pos = 0usize;
    let magic = take(bytes, &mut pos, 4, "TNSC magic")?;
    if magic != b"TNSC" {
        return Err(Error::TensorFormat("bad TNSC magic".into()));
    }
    let count = read_u32(bytes, &mut pos, "TNSC count")? as usize;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = read_u32(bytes, &mut pos, "TNSC name length")? as usize;
        let name_bytes = take(bytes, &mut pos, name_len, "TNSC name")?;
        let name = std::str::from_utf8(name_bytes)
            .map_err(|_| Error::TensorFormat("TNSC name is not UTF-8".into()))?
            .to_string();
        let (dims, data) = decode_tnsr_at(bytes, &mut pos)?;
        entries.push((name, dims, data));
    }
    if pos != bytes.len() {
        return Err(Error::TensorFormat(format!(
            "{} trailing bytes after TNSC container",
            bytes.len() - pos
        )));
    }
    Ok(entries)
}

pub fn write_tnsr(path: &Path, dims: &[usize], data: &[f64]) -> Result<()> {
    std::fs::write(path, encode_tnsr(dims, data))?;
    Ok(())
}

pub fn read_tnsr(path: &Path) -> Result<(Vec<usize>, Vec<f64>)> {
    decode_tnsr(&std::fs::read(path)?)
}

pub fn write_tnsc(path: &Path, entries: &[NamedTensor]) -> Result<()> {
    std::fs::write(path, encode_tnsc(entries))?;
    Ok(())
}

pub fn read_tnsc(path: &Path) -> Result<Vec<NamedTensor>> {
    decode_tnsc(&std::fs::read(path)?)
}
