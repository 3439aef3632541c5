//! Iterative radix-2 FFT over `Complex64`.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// In-place bit-reversal permutation.
fn bit_reverse(data: &mut [Complex64]) {
    let n = data.len();
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            data.swap(i, j);
        }
    }
}

/// Radix-2 decimation-in-time FFT.
///
/// Forward: `X[k] = sum_n x[n] * exp(-2*pi*i*k*n/N)`. Inverse applies the
/// conjugate transform and scales by `1/N`, so `ifft(fft(x)) == x` up to
/// rounding. The length must be a power of two; callers zero-pad.
pub fn fft(input: &[Complex64], inverse: bool) -> Result<Vec<Complex64>> {
    let n = input.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Dsp(format!(
            "fft length must be a nonzero power of two, got {n}"
        )));
    }
    let mut data = input.to_vec();
    bit_reverse(&mut data);

    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2usize;
    while len <= n {
        let ang = sign * 2.0 * std::f64::consts::PI / len as f64;
        let wlen = Complex64::new(ang.cos(), ang.sin());
        for start in (0..n).step_by(len) {
            let mut w = Complex64::new(1.0, 0.0);
            for k in 0..len / 2 {
                let u = data[start + k];
                let v = data[start + k + len / 2] * w;
                data[start + k] = u + v;
                data[start + k + len / 2] = u - v;
                w *= wlen;
            }
        }
        len <<= 1;
    }

    if inverse {
        let scale = 1.0 / n as f64;
        for v in &mut data {
            *v *= scale;
        }
    }
    Ok(data)
}

/// Forward FFT of a real signal, returning the full complex spectrum.
pub fn fft_real(input: &[f64], inverse: bool) -> Result<Vec<Complex64>> {
    let buf: Vec<Complex64> = input.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft(&buf, inverse)
}
