//! Header-only image writers (PGM/PPM) and matrix rendering.
//!
//! These formats are dependency-free and byte-exactly testable; anything
//! that reads Netpbm can view them.

use hyperwave_core::error::Result;
use hyperwave_core::mat::Mat;
use std::path::Path;

/// 8-bit grayscale PGM (P5).
pub fn write_pgm(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    assert_eq!(pixels.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    std::fs::write(path, out)?;
    Ok(())
}

/// 8-bit RGB PPM (P6).
pub fn write_ppm(path: &Path, width: usize, height: usize, rgb: &[u8]) -> Result<()> {
    assert_eq!(rgb.len(), width * height * 3);
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(rgb);
    std::fs::write(path, out)?;
    Ok(())
}

/// Render a feature matrix as grayscale, brightest at the maximum.
/// Row 0 of the matrix lands at the bottom of the image (spectrogram
/// convention). `log_scale` applies log(1 + x) before normalizing,
/// for power-like data.
pub fn render_matrix(m: &Mat, log_scale: bool) -> (Vec<u8>, usize, usize) {
    let (rows, cols) = (m.rows(), m.cols());
    let mut values = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for &v in m.row(r) {
            values.push(if log_scale { v.max(0.0).ln_1p() } else { v });
        }
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (max - min).max(1e-300);
    let mut pixels = vec![0u8; rows * cols];
    for r in 0..rows {
        let img_row = rows - 1 - r;
        for c in 0..cols {
            let v = (values[r * cols + c] - min) / span;
            pixels[img_row * cols + c] = (v * 255.0).round() as u8;
        }
    }
    (pixels, cols, rows)
}

/// Min/max envelope plot of a waveform, white on black.
pub fn render_waveform(samples: &[f64], width: usize, height: usize) -> Vec<u8> {
    let mut pixels = vec![0u8; width * height];
    if samples.is_empty() {
        return pixels;
    }
    let per_col = (samples.len() as f64 / width as f64).max(1.0);
    for col in 0..width {
        let start = (col as f64 * per_col) as usize;
        let end = (((col + 1) as f64 * per_col) as usize).min(samples.len());
        if start >= end {
            continue;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &s in &samples[start..end] {
            lo = lo.min(s);
            hi = hi.max(s);
        }
        // Map [-1, 1] to [height-1, 0].
        let to_row = |v: f64| -> usize {
            let t = ((1.0 - v.clamp(-1.0, 1.0)) / 2.0 * (height - 1) as f64).round();
            t as usize
        };
        let (top, bottom) = (to_row(hi), to_row(lo));
        for row in top..=bottom.min(height - 1) {
            pixels[row * width + col] = 255;
        }
    }
    pixels
}

/// Distinct color per label index.
pub fn label_color(index: usize) -> [u8; 3] {
    const PALETTE: [[u8; 3]; 9] = [
        [230, 60, 60],
        [60, 160, 230],
        [80, 200, 100],
        [235, 180, 50],
        [170, 90, 220],
        [70, 210, 200],
        [235, 120, 180],
        [150, 150, 150],
        [130, 100, 60],
    ];
    PALETTE[index % PALETTE.len()]
}

/// Scatter plot of 2D points colored by label index, white background.
pub fn render_scatter(points: &[(f64, f64, usize)], width: usize, height: usize) -> Vec<u8> {
    let mut rgb = vec![255u8; width * height * 3];
    if points.is_empty() {
        return rgb;
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y, _) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let xs = (x1 - x0).max(1e-12);
    let ys = (y1 - y0).max(1e-12);
    let margin = 8usize;
    for &(x, y, label) in points {
        let px = margin as f64 + (x - x0) / xs * (width - 2 * margin - 1) as f64;
        let py = margin as f64 + (1.0 - (y - y0) / ys) * (height - 2 * margin - 1) as f64;
        let color = label_color(label);
        for dy in 0..2usize {
            for dx in 0..2usize {
                let cx = (px as usize + dx).min(width - 1);
                let cy = (py as usize + dy).min(height - 1);
                let off = (cy * width + cx) * 3;
                rgb[off..off + 3].copy_from_slice(&color);
            }
        }
    }
    rgb
}
