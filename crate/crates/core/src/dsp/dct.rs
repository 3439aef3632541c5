//! Orthonormal DCT-II applied per column.

use crate::error::{Error, Result};
use crate::mat::Mat;

/// DCT-II with orthonormal scaling, applied to each column of `m`,
/// keeping the first `n_out` coefficients.
///
/// `Y[k] = s_k * sum_n X[n] * cos(pi * (n + 1/2) * k / N)` with
/// `s_0 = sqrt(1/N)` and `s_k = sqrt(2/N)` otherwise, so the full transform
/// preserves the column L2 norm.
pub fn dct_ii(m: &Mat, n_out: usize) -> Result<Mat> {
    let n = m.rows();
    if n_out > n {
        return Err(Error::Dsp(format!(
            "dct_ii: n_out {n_out} exceeds input rows {n}"
        )));
    }
    let scale0 = (1.0 / n as f64).sqrt();
    let scale = (2.0 / n as f64).sqrt();

    // Precompute the basis: basis[k][n] row-major.
    let mut basis = Mat::zeros(n_out, n);
    for k in 0..n_out {
        let s = if k == 0 { scale0 } else { scale };
        let row = basis.row_mut(k);
        for (j, b) in row.iter_mut().enumerate() {
            *b = s * (std::f64::consts::PI * (j as f64 + 0.5) * k as f64 / n as f64).cos();
        }
    }

    let cols = m.cols();
    let mut out = Mat::zeros(n_out, cols);
    for k in 0..n_out {
        let bk = basis.row(k);
        for c in 0..cols {
            let mut acc = 0.0;
            for (j, &b) in bk.iter().enumerate() {
                acc += b * m.get(j, c);
            }
            out.set(k, c, acc);
        }
    }
    Ok(out)
}
