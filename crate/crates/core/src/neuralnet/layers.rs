//! Layer forward passes and their analytic adjoints.
//!
//! Feature maps are (H, W, C) row-major with channels innermost, so the hot
//! loops run over contiguous channel slices. Convolution weights are
//! (field, field, Cin, Cout) with Cout innermost for the same reason.

use super::tensor::Tensor;
use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

/// Cross-correlation with bias.
///
/// `x`: (H, W, Cin); `w`: (f, f, Cin, Cout); `b`: (Cout); output (H', W', Cout)
/// with `H' = (H + 2p - f) / stride + 1`.
pub fn conv2d(x: &Tensor, w: &Tensor, b: &Tensor, stride: usize, pad: usize) -> Result<Tensor> {
    let [h, wd, cin] = dims3(x, "conv input")?;
    let (f, cin_w, cout) = conv_dims(w)?;
    if cin_w != cin {
        return Err(Error::Shape(format!(
            "conv weight expects {cin_w} input channels, map has {cin}"
        )));
    }
    if b.dims() != [cout] {
        return Err(Error::Shape("conv bias shape mismatch".into()));
    }
    let oh = out_extent(h, f, stride, pad)?;
    let ow = out_extent(wd, f, stride, pad)?;

    let xd = x.data();
    let wd_ = w.data();
    let bd = b.data();
    let mut out = Tensor::zeros(&[oh, ow, cout]);
    let od = out.data_mut();

    for oy in 0..oh {
        let base_y = (oy * stride) as isize - pad as isize;
        for ox in 0..ow {
            let base_x = (ox * stride) as isize - pad as isize;
            let acc = &mut od[(oy * ow + ox) * cout..(oy * ow + ox + 1) * cout];
            acc.copy_from_slice(bd);
            for ky in 0..f {
                let iy = base_y + ky as isize;
                if iy < 0 || iy >= h as isize {
                    continue;
                }
                for kx in 0..f {
                    let ix = base_x + kx as isize;
                    if ix < 0 || ix >= wd as isize {
                        continue;
                    }
                    let x_off = ((iy as usize * wd) + ix as usize) * cin;
                    let w_off = ((ky * f + kx) * cin) * cout;
                    for ci in 0..cin {
                        let s = xd[x_off + ci];
                        let wrow = &wd_[w_off + ci * cout..w_off + (ci + 1) * cout];
                        for (a, &wv) in acc.iter_mut().zip(wrow) {
                            *a += s * wv;
                        }
                    }
                }
            }
        }
    }
    out.assert_finite("conv2d");
    Ok(out)
}

/// Adjoint of [`conv2d`]: gradients w.r.t. input, weights, and bias.
pub fn conv2d_backward(
    x: &Tensor,
    w: &Tensor,
    dy: &Tensor,
    stride: usize,
    pad: usize,
) -> Result<(Tensor, Tensor, Tensor)> {
    let [h, wd, cin] = dims3(x, "conv input")?;
    let (f, _, cout) = conv_dims(w)?;
    let [oh, ow, cout_dy] = dims3(dy, "conv output gradient")?;
    if cout_dy != cout {
        return Err(Error::Shape("conv gradient channels mismatch".into()));
    }

    let xd = x.data();
    let wd_ = w.data();
    let dyd = dy.data();
    let mut dx = Tensor::zeros(x.dims());
    let mut dw = Tensor::zeros(w.dims());
    let mut db = Tensor::zeros(&[cout]);
    {
        let dxd = dx.data_mut();
        let dwd = dw.data_mut();
        let dbd = db.data_mut();

        for oy in 0..oh {
            let base_y = (oy * stride) as isize - pad as isize;
            for ox in 0..ow {
                let base_x = (ox * stride) as isize - pad as isize;
                let g = &dyd[(oy * ow + ox) * cout..(oy * ow + ox + 1) * cout];
                for (d, &gv) in dbd.iter_mut().zip(g) {
                    *d += gv;
                }
                for ky in 0..f {
                    let iy = base_y + ky as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for kx in 0..f {
                        let ix = base_x + kx as isize;
                        if ix < 0 || ix >= wd as isize {
                            continue;
                        }
                        let x_off = ((iy as usize * wd) + ix as usize) * cin;
                        let w_off = ((ky * f + kx) * cin) * cout;
                        for ci in 0..cin {
                            let xv = xd[x_off + ci];
                            let wrow = &wd_[w_off + ci * cout..w_off + (ci + 1) * cout];
                            let dwrow = &mut dwd[w_off + ci * cout..w_off + (ci + 1) * cout];
                            let mut acc = 0.0;
                            for k in 0..cout {
                                dwrow[k] += xv * g[k];
                                acc += wrow[k] * g[k];
                            }
                            dxd[x_off + ci] += acc;
                        }
                    }
                }
            }
        }
    }
    Ok((dx, dw, db))
}

// ---------------------------------------------------------------------------
// ReLU
// ---------------------------------------------------------------------------

pub fn relu(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    for v in out.data_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    out
}

/// ReLU adjoint from the *post-activation* values: gradient passes where the
/// output is positive (zero exactly at the kink).
pub fn relu_backward(post: &Tensor, dy: &Tensor) -> Tensor {
    let mut dx = dy.clone();
    for (d, &p) in dx.data_mut().iter_mut().zip(post.data()) {
        if p <= 0.0 {
            *d = 0.0;
        }
    }
    dx
}

// ---------------------------------------------------------------------------
// Local response normalization (across channels)
// ---------------------------------------------------------------------------

/// `b_c = a_c / (k + (alpha/n) * sum_{j in window(c)} a_j^2)^beta` where the
/// window spans `n` channels centered on `c`, clipped to the channel range.
pub fn lrn(x: &Tensor, n: usize, k: f64, alpha: f64, beta: f64) -> Result<Tensor> {
    let [h, w, c] = dims3(x, "lrn input")?;
    if n.is_multiple_of(2) {
        return Err(Error::Shape("LRN size must be odd".into()));
    }
    let half = n / 2;
    let xd = x.data();
    let mut out = Tensor::zeros(x.dims());
    let od = out.data_mut();
    for pix in 0..h * w {
        let off = pix * c;
        let a = &xd[off..off + c];
        for ch in 0..c {
            let lo = ch.saturating_sub(half);
            let hi = (ch + half).min(c - 1);
            let sum_sq: f64 = a[lo..=hi].iter().map(|v| v * v).sum();
            let d = k + alpha / n as f64 * sum_sq;
            od[off + ch] = a[ch] * d.powf(-beta);
        }
    }
    out.assert_finite("lrn");
    Ok(out)
}

/// Exact analytic adjoint of [`lrn`].
pub fn lrn_backward(
    x: &Tensor,
    dy: &Tensor,
    n: usize,
    k: f64,
    alpha: f64,
    beta: f64,
) -> Result<Tensor> {
    let [h, w, c] = dims3(x, "lrn input")?;
    let half = n / 2;
    let an = alpha / n as f64;
    let xd = x.data();
    let dyd = dy.data();
    let mut dx = Tensor::zeros(x.dims());
    let dxd = dx.data_mut();
    let mut denom = vec![0.0f64; c];
    for pix in 0..h * w {
        let off = pix * c;
        let a = &xd[off..off + c];
        let g = &dyd[off..off + c];
        for (ch, d) in denom.iter_mut().enumerate() {
            let lo = ch.saturating_sub(half);
            let hi = (ch + half).min(c - 1);
            let sum_sq: f64 = a[lo..=hi].iter().map(|v| v * v).sum();
            *d = k + an * sum_sq;
        }
        for j in 0..c {
            // Direct term plus the cross terms from every window containing j.
            let mut acc = g[j] * denom[j].powf(-beta);
            let lo = j.saturating_sub(half);
            let hi = (j + half).min(c - 1);
            let mut cross = 0.0;
            for cc in lo..=hi {
                cross += g[cc] * a[cc] * denom[cc].powf(-beta - 1.0);
            }
            acc -= 2.0 * an * beta * a[j] * cross;
            dxd[off + j] = acc;
        }
    }
    Ok(dx)
}

// ---------------------------------------------------------------------------
// Max pooling
// ---------------------------------------------------------------------------

pub fn max_pool(x: &Tensor, window: usize, stride: usize) -> Result<Tensor> {
    let [h, w, c] = dims3(x, "pool input")?;
    if window > h || window > w {
        return Err(Error::Shape(format!(
            "{window}x{window} pool exceeds {h}x{w} map"
        )));
    }
    let oh = (h - window) / stride + 1;
    let ow = (w - window) / stride + 1;
    let xd = x.data();
    let mut out = Tensor::zeros(&[oh, ow, c]);
    let od = out.data_mut();
    for oy in 0..oh {
        for ox in 0..ow {
            let acc = &mut od[(oy * ow + ox) * c..(oy * ow + ox + 1) * c];
            acc.copy_from_slice(&xd[((oy * stride) * w + ox * stride) * c..][..c]);
            for ky in 0..window {
                for kx in 0..window {
                    if ky == 0 && kx == 0 {
                        continue;
                    }
                    let off = ((oy * stride + ky) * w + ox * stride + kx) * c;
                    for (a, &v) in acc.iter_mut().zip(&xd[off..off + c]) {
                        if v > *a {
                            *a = v;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Adjoint of [`max_pool`]: gradient routes to the argmax cell of each
/// window, first cell in row-major order on ties.
pub fn max_pool_backward(x: &Tensor, dy: &Tensor, window: usize, stride: usize) -> Result<Tensor> {
    let [_h, w, c] = dims3(x, "pool input")?;
    let [oh, ow, c_dy] = dims3(dy, "pool gradient")?;
    if c_dy != c {
        return Err(Error::Shape("pool gradient channels mismatch".into()));
    }
    let xd = x.data();
    let dyd = dy.data();
    let mut dx = Tensor::zeros(x.dims());
    let dxd = dx.data_mut();
    for oy in 0..oh {
        for ox in 0..ow {
            for ch in 0..c {
                let mut best = f64::NEG_INFINITY;
                let mut best_off = 0usize;
                for ky in 0..window {
                    for kx in 0..window {
                        let off = ((oy * stride + ky) * w + ox * stride + kx) * c + ch;
                        if xd[off] > best {
                            best = xd[off];
                            best_off = off;
                        }
                    }
                }
                dxd[best_off] += dyd[(oy * ow + ox) * c + ch];
            }
        }
    }
    Ok(dx)
}

// ---------------------------------------------------------------------------
// Fully connected
// ---------------------------------------------------------------------------

/// `y = W x + b` with `W` of shape (units, in).
pub fn fully_connected(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    let n_in = x.len();
    let [units, in_w] = dims2(w, "fc weight")?;
    if in_w != n_in {
        return Err(Error::Shape(format!(
            "fc weight expects {in_w} inputs, got {n_in}"
        )));
    }
    if b.dims() != [units] {
        return Err(Error::Shape("fc bias shape mismatch".into()));
    }
    let xd = x.data();
    let wd = w.data();
    let mut out = Tensor::zeros(&[units]);
    let od = out.data_mut();
    for u in 0..units {
        let row = &wd[u * n_in..(u + 1) * n_in];
        let mut acc = b.data()[u];
        for (wv, xv) in row.iter().zip(xd) {
            acc += wv * xv;
        }
        od[u] = acc;
    }
    out.assert_finite("fully_connected");
    Ok(out)
}

/// Adjoint of [`fully_connected`].
pub fn fully_connected_backward(
    x: &Tensor,
    w: &Tensor,
    dy: &Tensor,
) -> Result<(Tensor, Tensor, Tensor)> {
    let n_in = x.len();
    let [units, _] = dims2(w, "fc weight")?;
    if dy.len() != units {
        return Err(Error::Shape("fc gradient width mismatch".into()));
    }
    let xd = x.data();
    let wd = w.data();
    let dyd = dy.data();
    let mut dx = Tensor::zeros(&[n_in]);
    let mut dw = Tensor::zeros(w.dims());
    let db = Tensor::from_vec(&[units], dyd.to_vec())?;
    {
        let dxd = dx.data_mut();
        let dwd = dw.data_mut();
        for u in 0..units {
            let g = dyd[u];
            let row = &wd[u * n_in..(u + 1) * n_in];
            let drow = &mut dwd[u * n_in..(u + 1) * n_in];
            for i in 0..n_in {
                drow[i] += g * xd[i];
                dxd[i] += g * row[i];
            }
        }
    }
    Ok((dx, dw, db))
}

// ---------------------------------------------------------------------------
// Softmax cross-entropy
// ---------------------------------------------------------------------------

/// Numerically stabilized softmax probabilities.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Loss `-log softmax(logits)[label]` and its gradient `softmax - onehot`.
pub fn softmax_cross_entropy(logits: &Tensor, label: usize) -> Result<(f64, Tensor)> {
    let k = logits.len();
    if label >= k {
        return Err(Error::Data(format!("label {label} outside {k} classes")));
    }
    let p = softmax(logits.data());
    let loss = -p[label].max(f64::MIN_POSITIVE).ln();
    let mut grad = p;
    grad[label] -= 1.0;
    Ok((loss, Tensor::from_vec(&[k], grad)?))
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

fn dims3(t: &Tensor, what: &str) -> Result<[usize; 3]> {
    match t.dims() {
        [a, b, c] => Ok([*a, *b, *c]),
        other => Err(Error::Shape(format!(
            "{what}: expected rank 3, got {other:?}"
        ))),
    }
}

fn dims2(t: &Tensor, what: &str) -> Result<[usize; 2]> {
    match t.dims() {
        [a, b] => Ok([*a, *b]),
        other => Err(Error::Shape(format!(
            "{what}: expected rank 2, got {other:?}"
        ))),
    }
}

fn conv_dims(w: &Tensor) -> Result<(usize, usize, usize)> {
    match w.dims() {
        [f1, f2, cin, cout] if f1 == f2 => Ok((*f1, *cin, *cout)),
        other => Err(Error::Shape(format!(
            "conv weight: expected (f, f, cin, cout), got {other:?}"
        ))),
    }
}

fn out_extent(extent: usize, field: usize, stride: usize, pad: usize) -> Result<usize> {
    let padded = extent + 2 * pad;
    if padded < field {
        return Err(Error::Shape(format!(
            "{field}-wide kernel does not fit extent {extent} with pad {pad}"
        )));
    }
    Ok((padded - field) / stride + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_tensor(dims: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
        let n: usize = dims.iter().product();
        Tensor::from_vec(dims, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
    }

    /// Central finite differences of `loss_fn` w.r.t. each entry of `t`.
    fn numeric_grad(t: &Tensor, step: f64, mut loss_fn: impl FnMut(&Tensor) -> f64) -> Vec<f64> {
        let mut grads = Vec::with_capacity(t.len());
        for i in 0..t.len() {
            let mut plus = t.clone();
            plus.data_mut()[i] += step;
            let mut minus = t.clone();
            minus.data_mut()[i] -= step;
            grads.push((loss_fn(&plus) - loss_fn(&minus)) / (2.0 * step));
        }
        grads
    }

    fn weighted_sum(t: &Tensor, weights: &[f64]) -> f64 {
        t.data().iter().zip(weights).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn identity_kernel_reproduces_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = rand_tensor(&[5, 4, 3], &mut rng);
        // 1x1 kernel, identity across channels.
        let mut w = Tensor::zeros(&[1, 1, 3, 3]);
        for c in 0..3 {
            w.data_mut()[c * 3 + c] = 1.0;
        }
        let b = Tensor::zeros(&[3]);
        let y = conv2d(&x, &w, &b, 1, 0).unwrap();
        assert_eq!(y.dims(), x.dims());
        for (a, b) in x.data().iter().zip(y.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn first_layer_output_size_at_default_input() {
        let x = Tensor::zeros(&[205, 216, 1]);
        let w = Tensor::zeros(&[15, 15, 1, 64]);
        let b = Tensor::zeros(&[64]);
        let y = conv2d(&x, &w, &b, 5, 5).unwrap();
        assert_eq!(y.dims(), &[41, 43, 64]);
    }

    #[test]
    fn conv_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = rand_tensor(&[7, 7, 2], &mut rng);
        let w = rand_tensor(&[3, 3, 2, 4], &mut rng);
        let b = rand_tensor(&[4], &mut rng);
        let (stride, pad) = (2, 1);

        let y = conv2d(&x, &w, &b, stride, pad).unwrap();
        let probe: Vec<f64> = (0..y.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dy = Tensor::from_vec(y.dims(), probe.clone()).unwrap();
        let (dx, dw, db) = conv2d_backward(&x, &w, &dy, stride, pad).unwrap();

        let step = 1e-3;
        let num_dx = numeric_grad(&x, step, |t| {
            weighted_sum(&conv2d(t, &w, &b, stride, pad).unwrap(), &probe)
        });
        let num_dw = numeric_grad(&w, step, |t| {
            weighted_sum(&conv2d(&x, t, &b, stride, pad).unwrap(), &probe)
        });
        let num_db = numeric_grad(&b, step, |t| {
            weighted_sum(&conv2d(&x, &w, t, stride, pad).unwrap(), &probe)
        });

        for (a, n) in dx.data().iter().zip(&num_dx) {
            assert!(rel_err(*a, *n) < 1e-4, "dx: {a} vs {n}");
        }
        for (a, n) in dw.data().iter().zip(&num_dw) {
            assert!(rel_err(*a, *n) < 1e-4, "dw: {a} vs {n}");
        }
        for (a, n) in db.data().iter().zip(&num_db) {
            assert!(rel_err(*a, *n) < 1e-4, "db: {a} vs {n}");
        }
    }

    #[test]
    fn relu_basics_and_gradient() {
        let x = Tensor::from_vec(&[3], vec![-1.0, 0.0, 2.0]).unwrap();
        let y = relu(&x);
        assert_eq!(y.data(), &[0.0, 0.0, 2.0]);

        // Non-negative input is unchanged.
        let pos = Tensor::from_vec(&[3], vec![0.5, 1.0, 7.0]).unwrap();
        assert_eq!(relu(&pos).data(), pos.data());

        // Finite differences away from the kink.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Tensor::from_vec(
            &[8],
            (0..8)
                .map(|_| {
                    let v: f64 = rng.gen_range(0.1..1.0);
                    if rng.gen_bool(0.5) {
                        v
                    } else {
                        -v
                    }
                })
                .collect(),
        )
        .unwrap();
        let probe: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let post = relu(&x);
        let dy = Tensor::from_vec(&[8], probe.clone()).unwrap();
        let dx = relu_backward(&post, &dy);
        let num = numeric_grad(&x, 1e-6, |t| weighted_sum(&relu(t), &probe));
        for (a, n) in dx.data().iter().zip(&num) {
            assert!((a - n).abs() < 1e-6, "{a} vs {n}");
        }
    }

    #[test]
    fn lrn_zero_and_single_channel_formula() {
        let zero = Tensor::zeros(&[2, 2, 4]);
        let out = lrn(&zero, 5, 2.0, 1e-4, 0.75).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));

        // C = 1, n = 1, k = 2, alpha = 1e-4, beta = 0.75, a = 1:
        // b = 1 / (2 + 1e-4)^0.75.
        let one = Tensor::from_vec(&[1, 1, 1], vec![1.0]).unwrap();
        let out = lrn(&one, 1, 2.0, 1e-4, 0.75).unwrap();
        let expected = (2.0f64 + 1e-4).powf(-0.75);
        assert!((out.data()[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn lrn_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = rand_tensor(&[3, 3, 8], &mut rng);
        let probe: Vec<f64> = (0..x.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (n, k, alpha, beta) = (5, 2.0, 1e-4, 0.75);
        let dy = Tensor::from_vec(x.dims(), probe.clone()).unwrap();
        let dx = lrn_backward(&x, &dy, n, k, alpha, beta).unwrap();
        let num = numeric_grad(&x, 1e-3, |t| {
            weighted_sum(&lrn(t, n, k, alpha, beta).unwrap(), &probe)
        });
        for (a, nv) in dx.data().iter().zip(&num) {
            assert!(rel_err(*a, *nv) < 1e-4, "{a} vs {nv}");
        }
    }

    #[test]
    fn pool_constant_and_shapes() {
        let x = Tensor::from_vec(&[4, 4, 2], vec![0.3; 32]).unwrap();
        let y = max_pool(&x, 3, 2).unwrap();
        assert_eq!(y.dims(), &[1, 1, 2]);
        assert!(y.data().iter().all(|&v| (v - 0.3).abs() < 1e-12));

        let x = Tensor::zeros(&[41, 43, 64]);
        let y = max_pool(&x, 3, 2).unwrap();
        assert_eq!(y.dims(), &[20, 21, 64]);
        let y2 = max_pool(&y, 3, 2).unwrap();
        assert_eq!(y2.dims(), &[9, 10, 64]);
    }

    #[test]
    fn pool_gradient_matches_finite_differences_without_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = rand_tensor(&[5, 5, 3], &mut rng); // continuous => ties have measure zero
        let y = max_pool(&x, 3, 2).unwrap();
        let probe: Vec<f64> = (0..y.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dy = Tensor::from_vec(y.dims(), probe.clone()).unwrap();
        let dx = max_pool_backward(&x, &dy, 3, 2).unwrap();
        let num = numeric_grad(&x, 1e-6, |t| {
            weighted_sum(&max_pool(t, 3, 2).unwrap(), &probe)
        });
        for (a, n) in dx.data().iter().zip(&num) {
            assert!((a - n).abs() < 1e-6, "{a} vs {n}");
        }
    }

    #[test]
    fn pool_tie_routes_to_first_cell_row_major() {
        let x = Tensor::from_vec(&[2, 2, 1], vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let dy = Tensor::from_vec(&[1, 1, 1], vec![1.0]).unwrap();
        let dx = max_pool_backward(&x, &dy, 2, 1).unwrap();
        assert_eq!(dx.data(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn fc_identity_and_gradient() {
        let x = Tensor::from_vec(&[3], vec![1.0, -2.0, 0.5]).unwrap();
        let mut w = Tensor::zeros(&[3, 3]);
        for i in 0..3 {
            w.data_mut()[i * 3 + i] = 1.0;
        }
        let b = Tensor::zeros(&[3]);
        let y = fully_connected(&x, &w, &b).unwrap();
        assert_eq!(y.data(), x.data());

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = rand_tensor(&[6], &mut rng);
        let w = rand_tensor(&[4, 6], &mut rng);
        let b = rand_tensor(&[4], &mut rng);
        let probe: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dy = Tensor::from_vec(&[4], probe.clone()).unwrap();
        let (dx, dw, db) = fully_connected_backward(&x, &w, &dy).unwrap();

        let num_dx = numeric_grad(&x, 1e-6, |t| {
            weighted_sum(&fully_connected(t, &w, &b).unwrap(), &probe)
        });
        let num_dw = numeric_grad(&w, 1e-6, |t| {
            weighted_sum(&fully_connected(&x, t, &b).unwrap(), &probe)
        });
        let num_db = numeric_grad(&b, 1e-6, |t| {
            weighted_sum(&fully_connected(&x, &w, t).unwrap(), &probe)
        });
        for (a, n) in dx.data().iter().zip(&num_dx) {
            assert!((a - n).abs() < 1e-6);
        }
        for (a, n) in dw.data().iter().zip(&num_dw) {
            assert!((a - n).abs() < 1e-6);
        }
        for (a, n) in db.data().iter().zip(&num_db) {
            assert!((a - n).abs() < 1e-6);
        }
    }

    #[test]
    fn softmax_ce_uniform_and_saturated() {
        let logits = Tensor::zeros(&[9]);
        let (loss, grad) = softmax_cross_entropy(&logits, 4).unwrap();
        assert!((loss - 9f64.ln()).abs() < 1e-12);
        let sum: f64 = grad.data().iter().sum();
        assert!(sum.abs() < 1e-12);

        let mut hot = Tensor::zeros(&[5]);
        hot.data_mut()[0] = 100.0;
        let (loss, _) = softmax_cross_entropy(&hot, 0).unwrap();
        assert!(loss < 1e-9);
    }

    #[test]
    fn softmax_ce_gradient_sums_to_zero_on_random_logits() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let logits = rand_tensor(&[9], &mut rng);
            let (_, grad) = softmax_cross_entropy(&logits, rng.gen_range(0..9)).unwrap();
            let sum: f64 = grad.data().iter().sum();
            assert!(sum.abs() < 1e-9);
        }
    }

    #[test]
    fn label_out_of_range_is_rejected() {
        let logits = Tensor::zeros(&[3]);
        assert!(softmax_cross_entropy(&logits, 3).is_err());
    }
}
