//! SMOTE reference generator: per-class linear interpolation between a
//! sample and one of its k nearest same-class neighbors.
//!
//! Every class (majority classes included) is oversampled to
//! `samples_per_class`, and only the synthetic rows are returned. Each output
//! row records a provenance triple `(base, neighbor, u)` so tests and
//! downstream audits can recompute the interpolation exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{derive_rng, stream};
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    pub samples_per_class: usize,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            k_neighbors: 5,
            samples_per_class: 300,
            seed: 0,
        }
    }
}

impl SmoteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors < 1 {
            return Err(Error::InvalidInput(
                "smote needs at least 1 neighbor".into(),
            ));
        }
        if self.samples_per_class < 1 {
            return Err(Error::InvalidInput(
                "smote needs at least 1 sample per class".into(),
            ));
        }
        Ok(())
    }
}

/// How one synthetic row was produced: `row = x[base] + u * (x[neighbor] - x[base])`.
/// Indices refer to rows of the original input matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoteProvenance {
    pub class: i64,
    pub base: usize,
    pub neighbor: usize,
    pub u: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoteOutput {
    pub x_syn: Matrix,
    pub y_syn: Vec<i64>,
    /// One entry per synthetic row, in row order.
    pub provenance: Vec<SmoteProvenance>,
    /// Notes about k being clamped on small classes.
    pub warnings: Vec<String>,
}

/// `base + u * (neighbor - base)`, the SMOTE interpolation.
pub fn interpolate(base: &[f64], neighbor: &[f64], u: f64) -> Vec<f64> {
    base.iter()
        .zip(neighbor)
        .map(|(b, n)| b + u * (n - b))
        .collect()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The `k` nearest same-class neighbors of `member` (positions into
/// `indices`), ties broken by the lower original row index.
fn k_nearest(x: &Matrix, indices: &[usize], member: usize, k: usize) -> Vec<usize> {
    let base = x.row(indices[member]);
    let mut candidates: Vec<(f64, usize)> = indices
        .iter()
        .enumerate()
        .filter(|(pos, _)| *pos != member)
        .map(|(_, &row)| (squared_distance(base, x.row(row)), row))
        .collect();
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    candidates.truncate(k);
    candidates.into_iter().map(|(_, row)| row).collect()
}

/// Generates `samples_per_class` synthetic rows for every class.
///
/// Per synthetic row the RNG stream is consumed in the order: base sample,
/// neighbor choice, interpolation factor `u ~ Uniform[0, 1)`.
pub fn smote_generate(x: &Matrix, y: &[i64], cfg: &SmoteConfig) -> Result<SmoteOutput> {
    cfg.validate()?;
    if x.rows() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} samples but {} labels",
            x.rows(),
            y.len()
        )));
    }
    if !x.all_finite() {
        return Err(Error::InvalidInput(
            "smote input contains non-finite values".into(),
        ));
    }
    let mut classes: Vec<i64> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(classes.len() * cfg.samples_per_class);
    let mut y_syn = Vec::with_capacity(classes.len() * cfg.samples_per_class);
    let mut provenance = Vec::with_capacity(classes.len() * cfg.samples_per_class);
    let mut warnings = Vec::new();

    for (class_pos, &class) in classes.iter().enumerate() {
        let indices: Vec<usize> = y
            .iter()
            .enumerate()
            .filter(|(_, &label)| label == class)
            .map(|(i, _)| i)
            .collect();
        if indices.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "class {class} has {} sample(s); smote needs at least 2",
                indices.len()
            )));
        }
        let k = cfg.k_neighbors.min(indices.len() - 1);
        if k < cfg.k_neighbors {
            warnings.push(format!(
                "class {class}: k clamped from {} to {k} ({} samples)",
                cfg.k_neighbors,
                indices.len()
            ));
        }
        let neighbors: Vec<Vec<usize>> = (0..indices.len())
            .map(|member| k_nearest(x, &indices, member, k))
            .collect();

        let mut rng = derive_rng(cfg.seed, &[stream::SMOTE, class_pos as u64]);
        for _ in 0..cfg.samples_per_class {
            let member = rng.gen_range(0..indices.len());
            let neighbor = neighbors[member][rng.gen_range(0..k)];
            let u: f64 = rng.gen();
            let base_row = indices[member];
            rows.push(interpolate(x.row(base_row), x.row(neighbor), u));
            y_syn.push(class);
            provenance.push(SmoteProvenance {
                class,
                base: base_row,
                neighbor,
                u,
            });
        }
    }

    Ok(SmoteOutput {
        x_syn: Matrix::from_rows(&rows)?,
        y_syn,
        provenance,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_toy, ToySpec};

    fn small_cfg(seed: u64) -> SmoteConfig {
        SmoteConfig {
            k_neighbors: 5,
            samples_per_class: 40,
            seed,
        }
    }

    #[test]
    fn defaults_match_the_reference_configuration() {
        let cfg = SmoteConfig::default();
        assert_eq!(cfg.k_neighbors, 5);
        assert_eq!(cfg.samples_per_class, 300);
    }

    #[test]
    fn two_point_class_stays_on_the_segment() {
        let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![2.0, 4.0]]).unwrap();
        let y = vec![0, 0];
        let out = smote_generate(&x, &y, &small_cfg(1)).unwrap();
        for i in 0..out.x_syn.rows() {
            let p = out.x_syn.row(i);
            // On the segment, p = u * (2, 4): the coordinates keep ratio 1:2.
            assert!((p[1] - 2.0 * p[0]).abs() < 1e-12);
            assert!(p[0] >= 0.0 && p[0] <= 2.0);
        }
        // k was clamped from 5 to 1.
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn interpolate_at_zero_returns_the_base() {
        let base = [1.0, -2.0, 0.5];
        let neighbor = [9.0, 9.0, 9.0];
        assert_eq!(interpolate(&base, &neighbor, 0.0), base.to_vec());
        assert_eq!(interpolate(&base, &neighbor, 1.0), neighbor.to_vec());
    }

    #[test]
    fn provenance_recomputes_every_row() {
        let ds = make_toy(&ToySpec::blobs(vec![0.6, 0.4], 3), 60, 5).unwrap();
        let out = smote_generate(&ds.x, &ds.y, &small_cfg(7)).unwrap();
        assert_eq!(out.provenance.len(), out.x_syn.rows());
        for (i, p) in out.provenance.iter().enumerate() {
            assert!(p.u >= 0.0 && p.u < 1.0);
            assert_eq!(ds.y[p.base], p.class);
            assert_eq!(ds.y[p.neighbor], p.class);
            let expect = interpolate(ds.x.row(p.base), ds.x.row(p.neighbor), p.u);
            let residual: f64 = out
                .x_syn
                .row(i)
                .iter()
                .zip(&expect)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(residual < 1e-9);
        }
    }

    #[test]
    fn output_is_balanced_and_deterministic() {
        let ds = make_toy(&ToySpec::blobs(vec![0.8, 0.15, 0.05], 2), 120, 9).unwrap();
        let out = smote_generate(&ds.x, &ds.y, &small_cfg(11)).unwrap();
        let mut counts = std::collections::BTreeMap::new();
        for &label in &out.y_syn {
            *counts.entry(label).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 3);
        assert!(counts.values().all(|&c| c == 40));
        let again = smote_generate(&ds.x, &ds.y, &small_cfg(11)).unwrap();
        assert_eq!(out, again);
        let different = smote_generate(&ds.x, &ds.y, &small_cfg(12)).unwrap();
        assert_ne!(out.x_syn, different.x_syn);
    }

    #[test]
    fn singleton_class_is_rejected() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let y = vec![0, 0, 1];
        assert!(smote_generate(&x, &y, &small_cfg(1)).is_err());
    }

    /// Independent k-NN oracle: repeatedly extract the minimum by
    /// (distance, index) without sorting the full list.
    fn knn_oracle(x: &Matrix, indices: &[usize], member: usize, k: usize) -> Vec<usize> {
        let base = x.row(indices[member]);
        let mut remaining: Vec<usize> = indices
            .iter()
            .enumerate()
            .filter(|(pos, _)| *pos != member)
            .map(|(_, &row)| row)
            .collect();
        let mut picked = Vec::new();
        for _ in 0..k {
            let mut best = 0;
            for cand in 1..remaining.len() {
                let db = squared_distance(base, x.row(remaining[cand]));
                let da = squared_distance(base, x.row(remaining[best]));
                if db < da || (db == da && remaining[cand] < remaining[best]) {
                    best = cand;
                }
            }
            picked.push(remaining.remove(best));
        }
        picked
    }

    #[test]
    fn neighbors_match_brute_force_oracle() {
        let ds = make_toy(&ToySpec::blobs(vec![1.0], 3), 50, 13).unwrap();
        let indices: Vec<usize> = (0..ds.n_samples()).collect();
        for member in 0..indices.len() {
            for k in [1, 3, 5] {
                let got = k_nearest(&ds.x, &indices, member, k);
                let expect = knn_oracle(&ds.x, &indices, member, k);
                assert_eq!(got, expect, "member {member}, k {k}");
            }
        }
    }

    #[test]
    fn distance_ties_break_on_lower_index() {
        // Three equidistant neighbors of the origin.
        let x = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![-1.0, 0.0],
        ])
        .unwrap();
        let indices = vec![0, 1, 2, 3];
        assert_eq!(k_nearest(&x, &indices, 0, 2), vec![1, 2]);
    }
}
