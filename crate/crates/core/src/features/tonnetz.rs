//! Tonal centroid features: chroma projected onto circles of fifths,
//! minor thirds, and major thirds (Harte-style 6-dimensional space).

use crate::dsp::FeatureMatrix;
use crate::error::{Error, Result};
use crate::mat::Mat;

/// The fixed 6x12 projection. Rows are (sin, cos) pairs: fifths at radius 1
/// and step 7*pi/6, minor thirds at radius 1 and step 3*pi/2, major thirds
/// at radius 0.5 and step 2*pi/3.
pub fn projection_matrix() -> Mat {
    let mut m = Mat::zeros(6, 12);
    for l in 0..12 {
        let lf = l as f64;
        let fifths = lf * 7.0 * std::f64::consts::PI / 6.0;
        let minor = lf * 3.0 * std::f64::consts::PI / 2.0;
        let major = lf * 2.0 * std::f64::consts::PI / 3.0;
        m.set(0, l, fifths.sin());
        m.set(1, l, fifths.cos());
        m.set(2, l, minor.sin());
        m.set(3, l, minor.cos());
        m.set(4, l, 0.5 * major.sin());
        m.set(5, l, 0.5 * major.cos());
    }
    m
}

/// 6-row tonnetz: per frame, the L1-normalized chroma vector mapped through
/// [`projection_matrix`]. All-zero chroma frames map to all-zero output.
pub fn tonnetz(chroma: &FeatureMatrix) -> Result<FeatureMatrix> {
    if chroma.n_bins() != 12 {
        return Err(Error::feature(
            "tonnetz",
            format!("expected 12 chroma rows, got {}", chroma.n_bins()),
        ));
    }
    let proj = projection_matrix();
    let n_frames = chroma.n_frames();
    let mut out = Mat::zeros(6, n_frames);
    for t in 0..n_frames {
        let mut v = [0.0f64; 12];
        let mut l1 = 0.0;
        for (c, slot) in v.iter_mut().enumerate() {
            *slot = chroma.values.get(c, t);
            l1 += slot.abs();
        }
        if l1 == 0.0 {
            continue;
        }
        for row in 0..6 {
            let mut acc = 0.0;
            for (c, &val) in v.iter().enumerate() {
                acc += proj.get(row, c) * val;
            }
            out.set(row, t, acc / l1);
        }
    }
    Ok(FeatureMatrix {
        name: "tonnetz".to_string(),
        values: out,
        bin_labels: Some(
            ["5th-sin", "5th-cos", "m3-sin", "m3-cos", "M3-sin", "M3-cos"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        ),
        frame_hop_s: chroma.frame_hop_s,
    })
}
