//! Principal component analysis: fit on the sample covariance, transform,
//! inverse-transform, and variance-threshold component selection.
//!
//! The eigendecomposition is a cyclic Jacobi iteration on the (symmetric)
//! covariance matrix; datasets here stay well under a hundred features, where
//! Jacobi is simple, accurate, and fully deterministic. Eigenvector sign is
//! normalized so each component's largest-magnitude entry is positive,
//! otherwise the decomposition would be reproducible only up to sign.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A fitted PCA basis.
///
/// `components` is `k x d` with orthonormal rows ordered by descending
/// eigenvalue; `explained_variance` holds the matching eigenvalues and
/// `explained_variance_ratio` their share of the total variance. `k` is the
/// smallest count whose cumulative ratio reaches the fit threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: Matrix,
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.components.cols()
    }
}

/// Jacobi eigendecomposition of a symmetric matrix. Returns the eigenvalues
/// in descending order and the matching eigenvectors as rows. Ties keep the
/// pre-sort (diagonal index) order.
fn symmetric_eigen(matrix: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let d = matrix.rows();
    if matrix.cols() != d {
        return Err(Error::ShapeMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            matrix.rows(),
            matrix.cols()
        )));
    }
    let mut a = matrix.clone();
    // Columns of `v` accumulate the eigenvectors.
    let mut v = Matrix::zeros(d, d);
    for i in 0..d {
        v[(i, i)] = 1.0;
    }

    let scale = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| a[(i, j)].abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let tol = 1e-14 * scale;

    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..d {
            for q in (p + 1)..d {
                off = off.max(a[(p, q)].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[(p, q)];
                if apq.abs() <= tol {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for i in 0..d {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = c * aip - s * aiq;
                    a[(i, q)] = s * aip + c * aiq;
                }
                for i in 0..d {
                    let api = a[(p, i)];
                    let aqi = a[(q, i)];
                    a[(p, i)] = c * api - s * aqi;
                    a[(q, i)] = s * api + c * aqi;
                }
                for i in 0..d {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s * viq;
                    v[(i, q)] = s * vip + c * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| {
        a[(j, j)]
            .partial_cmp(&a[(i, i)])
            .unwrap()
            .then(i.cmp(&j))
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(d, d);
    for (row, &col) in order.iter().enumerate() {
        for i in 0..d {
            vectors[(row, i)] = v[(i, col)];
        }
    }
    Ok((eigenvalues, vectors))
}

/// Fits a PCA basis on `x`, selecting the smallest component count whose
/// cumulative explained-variance ratio reaches `variance_threshold`.
pub fn pca_fit(x: &Matrix, variance_threshold: f64) -> Result<PcaModel> {
    if x.rows() < 2 {
        return Err(Error::InvalidInput(format!(
            "PCA needs at least 2 samples, got {}",
            x.rows()
        )));
    }
    if !x.all_finite() {
        return Err(Error::InvalidInput(
            "PCA input contains non-finite values".into(),
        ));
    }
    if !variance_threshold.is_finite() || variance_threshold <= 0.0 || variance_threshold > 1.0 {
        return Err(Error::InvalidInput(format!(
            "variance threshold must lie in (0, 1], got {variance_threshold}"
        )));
    }
    let n = x.rows();
    let mean = x.col_means();
    let mut centered = x.clone();
    for i in 0..n {
        for (v, mu) in centered.row_mut(i).iter_mut().zip(&mean) {
            *v -= mu;
        }
    }
    let mut cov = centered.matmul_ta(&centered)?;
    let denom = 1.0 / (n as f64 - 1.0);
    for v in cov.data_mut() {
        *v *= denom;
    }

    let (mut eigenvalues, mut vectors) = symmetric_eigen(&cov)?;
    // Numerically zero (or slightly negative) eigenvalues are exact zeros of
    // the PSD covariance; clamping keeps ratios and rank selection exact.
    let lambda_max = eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let clamp_tol = lambda_max * 1e-12;
    for lambda in &mut eigenvalues {
        if *lambda <= clamp_tol {
            *lambda = 0.0;
        }
    }
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidInput(
            "PCA input has zero variance (all rows identical)".into(),
        ));
    }

    // Sign convention: the largest-magnitude entry of each component is
    // positive (first such entry on exact ties).
    for i in 0..vectors.rows() {
        let row = vectors.row_mut(i);
        let mut best = 0;
        for (j, v) in row.iter().enumerate() {
            if v.abs() > row[best].abs() {
                best = j;
            }
        }
        if row[best] < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
    }

    // Accumulate eigenvalues and divide once, so a full prefix of the
    // positive spectrum yields a cumulative ratio of exactly 1.0.
    let mut k = 0;
    let mut cum = 0.0;
    for lambda in &eigenvalues {
        cum += lambda;
        k += 1;
        if cum / total >= variance_threshold {
            break;
        }
    }

    let components = vectors.select_rows(&(0..k).collect::<Vec<_>>());
    let explained_variance = eigenvalues[..k].to_vec();
    let explained_variance_ratio = explained_variance.iter().map(|l| l / total).collect();
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
        explained_variance_ratio,
    })
}

/// Projects `x` onto the component basis: `(x - mean) * components^T`.
pub fn pca_transform(model: &PcaModel, x: &Matrix) -> Result<Matrix> {
    if x.cols() != model.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "input has {} columns but the PCA basis expects {}",
            x.cols(),
            model.input_dim()
        )));
    }
    let mut centered = x.clone();
    for i in 0..centered.rows() {
        for (v, mu) in centered.row_mut(i).iter_mut().zip(&model.mean) {
            *v -= mu;
        }
    }
    centered.matmul_bt(&model.components)
}

/// Maps component-space points back to the original space:
/// `z * components + mean`.
pub fn pca_inverse(model: &PcaModel, z: &Matrix) -> Result<Matrix> {
    if z.cols() != model.n_components() {
        return Err(Error::ShapeMismatch(format!(
            "input has {} columns but the model holds {} components",
            z.cols(),
            model.n_components()
        )));
    }
    let mut out = z.matmul(&model.components)?;
    for i in 0..out.rows() {
        for (v, mu) in out.row_mut(i).iter_mut().zip(&model.mean) {
            *v += mu;
        }
    }
    Ok(out)
}
