//! Principal component analysis via eigendecomposition of the covariance.

use crate::error::{Error, Result};
use crate::mat::Mat;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    /// Orthonormal rows, one per component, sorted by eigenvalue descending.
    pub components: Mat,
    /// Eigenvalues of the kept components (projection variances).
    pub eigenvalues: Vec<f64>,
    /// Fraction of total variance per kept component.
    pub explained_variance_ratio: Vec<f64>,
    pub mean: Vec<f64>,
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// (eigenvalues, eigenvectors as columns), unsorted.
fn jacobi_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.rows();
    let mut m = a.clone();
    let mut v = Mat::zeros(n, n);
    for i in 0..n {
        v.set(i, i, 1.0);
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for r in 0..n {
            for c in r + 1..n {
                off += m.get(r, c) * m.get(r, c);
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + frobenius(&m)) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // Rotate rows/columns p and q.
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let eigenvalues = (0..n).map(|i| m.get(i, i)).collect();
    (eigenvalues, v)
}

fn frobenius(m: &Mat) -> f64 {
    m.data().iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Fit a PCA model on `vectors` (rows are items).
///
/// Mean-centered covariance with divisor `n - 1`; components carry a
/// deterministic sign (largest-magnitude entry positive, first such entry
/// on ties).
pub fn pca_fit(vectors: &Mat, n_components: usize) -> Result<Pca> {
    let n = vectors.rows();
    let d = vectors.cols();
    if n < 2 {
        return Err(Error::Data("PCA needs at least two items".into()));
    }
    if n_components == 0 || n_components > d.min(n) {
        return Err(Error::Config(format!(
            "n_components must be in 1..={}, got {n_components}",
            d.min(n)
        )));
    }

    let mut mean = vec![0.0f64; d];
    for r in 0..n {
        for (m, &v) in mean.iter_mut().zip(vectors.row(r)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    // Covariance (d x d), divisor n - 1.
    let mut cov = Mat::zeros(d, d);
    for r in 0..n {
        let row = vectors.row(r);
        for i in 0..d {
            let di = row[i] - mean[i];
            for j in i..d {
                let dj = row[j] - mean[j];
                let cur = cov.get(i, j);
                cov.set(i, j, cur + di * dj);
            }
        }
    }
    let scale = 1.0 / (n as f64 - 1.0);
    for i in 0..d {
        for j in i..d {
            let v = cov.get(i, j) * scale;
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }

    let total_variance: f64 = (0..d).map(|i| cov.get(i, i)).sum();
    if total_variance <= 1e-12 {
        return Err(Error::Data("degenerate input: all points identical".into()));
    }

    let (eigenvalues, eigenvectors) = jacobi_eigen(&cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eigenvalues[b]
            .partial_cmp(&eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut components = Mat::zeros(n_components, d);
    let mut kept_eigenvalues = Vec::with_capacity(n_components);
    for (row, &col) in order.iter().take(n_components).enumerate() {
        let mut comp: Vec<f64> = (0..d).map(|i| eigenvectors.get(i, col)).collect();
        // Deterministic sign: the largest-magnitude entry is positive.
        let lead = comp
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0);
        if comp[lead] < 0.0 {
            for v in &mut comp {
                *v = -*v;
            }
        }
        components.row_mut(row).copy_from_slice(&comp);
        kept_eigenvalues.push(eigenvalues[order[row]].max(0.0));
    }

    let explained_variance_ratio = kept_eigenvalues
        .iter()
        .map(|&l| l / total_variance)
        .collect();

    Ok(Pca {
        components,
        eigenvalues: kept_eigenvalues,
        explained_variance_ratio,
        mean,
    })
}

/// Project rows of `vectors` into the component space: `(v - mean) . C^T`.
pub fn pca_project(model: &Pca, vectors: &Mat) -> Result<Mat> {
    let d = model.mean.len();
    if vectors.cols() != d {
        return Err(Error::Shape(format!(
            "vectors have width {}, model expects {d}",
            vectors.cols()
        )));
    }
    let k = model.components.rows();
    let mut out = Mat::zeros(vectors.rows(), k);
    let mut centered = vec![0.0f64; d];
    for r in 0..vectors.rows() {
        for (c, (&v, &m)) in vectors.row(r).iter().zip(&model.mean).enumerate() {
            centered[c] = v - m;
        }
        let row = out.row_mut(r);
        for (ki, slot) in row.iter_mut().enumerate() {
            *slot = model
                .components
                .row(ki)
                .iter()
                .zip(&centered)
                .map(|(&a, &b)| a * b)
                .sum();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(rows: usize, cols: usize, seed: u64) -> Mat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_vec(
            rows,
            cols,
            (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
    }

    /// Independent eigenvalue oracle: power iteration with deflation on the
    /// explicit covariance matrix.
    fn power_iteration_eigenvalues(cov: &Mat, k: usize) -> Vec<f64> {
        let d = cov.rows();
        let mut work = cov.clone();
        let mut out = Vec::with_capacity(k);
        for comp in 0..k {
            let mut v: Vec<f64> = (0..d)
                .map(|i| ((i + comp + 1) as f64).sin() + 0.5)
                .collect();
            let mut lambda = 0.0;
            for _ in 0..10_000 {
                let mut next = vec![0.0f64; d];
                for (i, n) in next.iter_mut().enumerate() {
                    *n = work.row(i).iter().zip(&v).map(|(&a, &b)| a * b).sum();
                }
                let norm: f64 = next.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm < 1e-300 {
                    break;
                }
                for n in &mut next {
                    *n /= norm;
                }
                let new_lambda: f64 = {
                    let mut av = vec![0.0f64; d];
                    for (i, n) in av.iter_mut().enumerate() {
                        *n = work.row(i).iter().zip(&next).map(|(&a, &b)| a * b).sum();
                    }
                    av.iter().zip(&next).map(|(&a, &b)| a * b).sum()
                };
                let done = (new_lambda - lambda).abs() < 1e-13 * new_lambda.abs().max(1.0);
                v = next;
                lambda = new_lambda;
                if done {
                    break;
                }
            }
            out.push(lambda);
            // Deflate: work -= lambda * v v^T.
            for i in 0..d {
                for j in 0..d {
                    let cur = work.get(i, j);
                    work.set(i, j, cur - lambda * v[i] * v[j]);
                }
            }
        }
        out
    }

    fn covariance(m: &Mat) -> Mat {
        let (n, d) = (m.rows(), m.cols());
        let mut mean = vec![0.0; d];
        for r in 0..n {
            for (s, &v) in mean.iter_mut().zip(m.row(r)) {
                *s += v;
            }
        }
        for s in &mut mean {
            *s /= n as f64;
        }
        let mut cov = Mat::zeros(d, d);
        for r in 0..n {
            for i in 0..d {
                for j in 0..d {
                    let cur = cov.get(i, j);
                    cov.set(
                        i,
                        j,
                        cur + (m.get(r, i) - mean[i]) * (m.get(r, j) - mean[j]),
                    );
                }
            }
        }
        for v in cov.data_mut() {
            *v /= (n - 1) as f64;
        }
        cov
    }

    #[test]
    fn line_in_3d_explains_everything_with_one_component() {
        let mut data = Vec::new();
        for i in 0..10 {
            let t = i as f64 * 0.7 - 3.0;
            data.extend_from_slice(&[2.0 * t + 1.0, -t, 0.5 * t + 4.0]);
        }
        let m = Mat::from_vec(10, 3, data);
        let pca = pca_fit(&m, 1).unwrap();
        assert!((pca.explained_variance_ratio[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn components_are_orthonormal() {
        let m = rand_mat(50, 8, 1);
        let pca = pca_fit(&m, 8).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let dot: f64 = pca
                    .components
                    .row(i)
                    .iter()
                    .zip(pca.components.row(j))
                    .map(|(&a, &b)| a * b)
                    .sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-9, "({i},{j}): {dot}");
            }
        }
    }

    #[test]
    fn full_rank_reconstruction_and_eigenvalue_oracle() {
        let m = rand_mat(50, 8, 2);
        let pca = pca_fit(&m, 8).unwrap();
        let proj = pca_project(&pca, &m).unwrap();

        // Reconstruct: x = mean + proj . C.
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                let mut v = pca.mean[c];
                for k in 0..8 {
                    v += proj.get(r, k) * pca.components.get(k, c);
                }
                assert!((v - m.get(r, c)).abs() < 1e-7, "({r},{c})");
            }
        }

        // Eigenvalues against the independent power-iteration oracle.
        let oracle = power_iteration_eigenvalues(&covariance(&m), 8);
        for (a, b) in pca.eigenvalues.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn projection_variance_equals_eigenvalue() {
        let m = rand_mat(80, 6, 3);
        let pca = pca_fit(&m, 6).unwrap();
        let proj = pca_project(&pca, &m).unwrap();
        for k in 0..6 {
            let col: Vec<f64> = (0..proj.rows()).map(|r| proj.get(r, k)).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var =
                col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (col.len() - 1) as f64;
            assert!(
                (var - pca.eigenvalues[k]).abs() < 1e-6,
                "component {k}: {var} vs {}",
                pca.eigenvalues[k]
            );
        }
    }

    #[test]
    fn projecting_the_mean_gives_zero() {
        let m = rand_mat(20, 5, 4);
        let pca = pca_fit(&m, 3).unwrap();
        let mean_row = Mat::from_vec(1, 5, pca.mean.clone());
        let proj = pca_project(&pca, &mean_row).unwrap();
        for v in proj.data() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn projection_is_non_expansive() {
        let m = rand_mat(30, 7, 5);
        let pca = pca_fit(&m, 4).unwrap();
        let a = rand_mat(1, 7, 6);
        let b = rand_mat(1, 7, 7);
        let pa = pca_project(&pca, &a).unwrap();
        let pb = pca_project(&pca, &b).unwrap();
        let d_orig: f64 = a
            .data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        let d_proj: f64 = pa
            .data()
            .iter()
            .zip(pb.data())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        assert!(d_proj <= d_orig + 1e-9);
    }

    #[test]
    fn ratios_are_non_increasing_and_bounded() {
        let m = rand_mat(40, 10, 8);
        let pca = pca_fit(&m, 6).unwrap();
        let total: f64 = pca.explained_variance_ratio.iter().sum();
        assert!(total <= 1.0 + 1e-9);
        for w in pca.explained_variance_ratio.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn degenerate_input_is_rejected() {
        let m = Mat::from_vec(5, 3, vec![0.5; 15]);
        assert!(pca_fit(&m, 2).is_err());
    }
}
