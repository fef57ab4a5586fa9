//! Distribution-similarity measures between two sample sets: per-feature
//! 1-D Wasserstein distance, RBF-kernel maximum mean discrepancy, and the
//! mean Euclidean distance to the nearest neighbor, plus per-class
//! aggregation.
//!
//! Conventions, fixed for reproducibility:
//! - the multivariate Wasserstein distance is the unweighted mean of the
//!   per-feature 1-D distances;
//! - MMD uses the biased V-statistic (self pairs included) with an RBF
//!   kernel `exp(-gamma * ||a - b||^2)`, `gamma = 1 / (2 * sigma^2)` where
//!   `sigma^2` is the median squared pairwise distance over the pooled
//!   samples (`gamma = 1` when that median is zero); the reported value is
//!   `sqrt(max(MMD^2, 0))`;
//! - MeanNN minimizes over the first argument and averages over the second.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Per-metric distances between a real and a synthetic sample set, per class
/// and averaged over classes (unweighted).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub wd: f64,
    pub mmd: f64,
    pub mean_nn: f64,
    pub per_class: BTreeMap<i64, ClassSimilarity>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassSimilarity {
    pub wd: f64,
    pub mmd: f64,
    pub mean_nn: f64,
}

fn check_nonempty_same_width(u: &Matrix, v: &Matrix) -> Result<()> {
    if u.rows() == 0 || v.rows() == 0 {
        return Err(Error::InvalidInput(
            "similarity metrics need nonempty sample sets".into(),
        ));
    }
    if u.cols() != v.cols() {
        return Err(Error::ShapeMismatch(format!(
            "sample sets have {} and {} columns",
            u.cols(),
            v.cols()
        )));
    }
    Ok(())
}

/// Exact 1-D empirical Wasserstein-1 distance between two value sets
/// (integral of |CDF_u - CDF_v|), supporting unequal sample counts.
fn wasserstein_1d(u: &[f64], v: &[f64]) -> f64 {
    let mut us = u.to_vec();
    let mut vs = v.to_vec();
    us.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut merged: Vec<f64> = Vec::with_capacity(us.len() + vs.len());
    merged.extend_from_slice(&us);
    merged.extend_from_slice(&vs);
    merged.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let nu = us.len() as f64;
    let nv = vs.len() as f64;
    let mut iu = 0;
    let mut iv = 0;
    let mut total = 0.0;
    for w in merged.windows(2) {
        let (left, right) = (w[0], w[1]);
        while iu < us.len() && us[iu] <= left {
            iu += 1;
        }
        while iv < vs.len() && vs[iv] <= left {
            iv += 1;
        }
        let cdf_u = iu as f64 / nu;
        let cdf_v = iv as f64 / nv;
        total += (cdf_u - cdf_v).abs() * (right - left);
    }
    total
}

/// Mean over features of the per-feature 1-D Wasserstein distance.
pub fn wasserstein_distance(u: &Matrix, v: &Matrix) -> Result<f64> {
    check_nonempty_same_width(u, v)?;
    let d = u.cols();
    let sum: f64 = (0..d)
        .map(|j| wasserstein_1d(&u.column(j), &v.column(j)))
        .sum();
    Ok(sum / d as f64)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median of the squared pairwise distances (unordered pairs of distinct
/// indices) over the pooled rows of `u` and `v`. Even counts average the two
/// middle values.
fn pooled_median_sq_distance(u: &Matrix, v: &Matrix) -> f64 {
    let rows: Vec<&[f64]> = u.iter_rows().chain(v.iter_rows()).collect();
    let n = rows.len();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dists.push(squared_distance(rows[i], rows[j]));
        }
    }
    if dists.is_empty() {
        return 0.0;
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = dists.len() / 2;
    if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        (dists[mid - 1] + dists[mid]) / 2.0
    }
}

/// RBF-kernel maximum mean discrepancy (biased estimator, square root of the
/// clamped squared statistic). The kernel bandwidth comes from the pooled
/// median heuristic; a degenerate pool (all points identical) falls back to
/// `gamma = 1`.
pub fn mmd(u: &Matrix, v: &Matrix) -> Result<f64> {
    check_nonempty_same_width(u, v)?;
    let sigma_sq = pooled_median_sq_distance(u, v);
    let gamma = if sigma_sq > 0.0 {
        1.0 / (2.0 * sigma_sq)
    } else {
        1.0
    };
    let kernel_mean = |a: &Matrix, b: &Matrix| -> f64 {
        let mut sum = 0.0;
        for i in 0..a.rows() {
            let ra = a.row(i);
            for j in 0..b.rows() {
                sum += (-gamma * squared_distance(ra, b.row(j))).exp();
            }
        }
        sum / (a.rows() as f64 * b.rows() as f64)
    };
    let k_uu = kernel_mean(u, u);
    let k_vv = kernel_mean(v, v);
    let k_uv = kernel_mean(u, v);
    let mmd_sq = k_uu + k_vv - 2.0 * k_uv;
    Ok(mmd_sq.max(0.0).sqrt())
}

/// Mean Euclidean distance from each row of `v` to its nearest row in `u`.
/// Asymmetric by construction: the minimum runs over `u`, the mean over `v`.
pub fn mean_nn(u: &Matrix, v: &Matrix) -> Result<f64> {
    check_nonempty_same_width(u, v)?;
    let mut total = 0.0;
    for i in 0..v.rows() {
        let rv = v.row(i);
        let nearest = (0..u.rows())
            .map(|j| squared_distance(rv, u.row(j)))
            .fold(f64::INFINITY, f64::min);
        total += nearest.sqrt();
    }
    Ok(total / v.rows() as f64)
}

/// Computes all three metrics per class between the real subset and the
/// synthetic subset, then averages over classes with equal weight.
///
/// Every class present in the real data must also be present in the
/// synthetic data and vice versa.
pub fn per_class_similarity(
    x_real: &Matrix,
    y_real: &[i64],
    x_syn: &Matrix,
    y_syn: &[i64],
) -> Result<SimilarityReport> {
    if x_real.rows() != y_real.len() || x_syn.rows() != y_syn.len() {
        return Err(Error::ShapeMismatch(
            "label length does not match sample count".into(),
        ));
    }
    let mut real_classes: Vec<i64> = y_real.to_vec();
    real_classes.sort_unstable();
    real_classes.dedup();
    let syn_classes: std::collections::BTreeSet<i64> = y_syn.iter().copied().collect();
    for c in &syn_classes {
        if !real_classes.contains(c) {
            return Err(Error::InvalidInput(format!(
                "synthetic data contains unknown class {c}"
            )));
        }
    }

    let mut per_class = BTreeMap::new();
    let (mut wd_sum, mut mmd_sum, mut nn_sum) = (0.0, 0.0, 0.0);
    for &c in &real_classes {
        if !syn_classes.contains(&c) {
            return Err(Error::InvalidInput(format!(
                "class {c} is present in the real data but missing from the synthetic data"
            )));
        }
        let real_idx: Vec<usize> = y_real
            .iter()
            .enumerate()
            .filter(|(_, &y)| y == c)
            .map(|(i, _)| i)
            .collect();
        let syn_idx: Vec<usize> = y_syn
            .iter()
            .enumerate()
            .filter(|(_, &y)| y == c)
            .map(|(i, _)| i)
            .collect();
        let real_sub = x_real.select_rows(&real_idx);
        let syn_sub = x_syn.select_rows(&syn_idx);
        let entry = ClassSimilarity {
            wd: wasserstein_distance(&real_sub, &syn_sub)?,
            mmd: mmd(&real_sub, &syn_sub)?,
            mean_nn: mean_nn(&real_sub, &syn_sub)?,
        };
        wd_sum += entry.wd;
        mmd_sum += entry.mmd;
        nn_sum += entry.mean_nn;
        per_class.insert(c, entry);
    }
    let k = real_classes.len() as f64;
    Ok(SimilarityReport {
        wd: wd_sum / k,
        mmd: mmd_sum / k,
        mean_nn: nn_sum / k,
        per_class,
    })
}
