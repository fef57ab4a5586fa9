//! Dataset ingestion, standardization, stratified splitting, and toy data.
//!
//! CSV files are comma-separated UTF-8 with `.` as the decimal point and an
//! optional header row. Features must be numeric and finite; labels may be
//! arbitrary strings and are mapped to dense integer ids (numeric labels sort
//! numerically, otherwise lexicographically), with the original names kept
//! for writing outputs.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{derive_rng, stream};

/// A numeric feature matrix with integer class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<i64>,
    pub feature_names: Option<Vec<String>>,
    /// Original label text per dense id, when the labels came from a file.
    pub label_names: Option<BTreeMap<i64, String>>,
    /// Header name of the label column, when the input had one.
    pub label_column_name: Option<String>,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vec<i64>) -> Result<Dataset> {
        Dataset::with_names(x, y, None, None)
    }

    pub fn with_names(
        x: Matrix,
        y: Vec<i64>,
        feature_names: Option<Vec<String>>,
        label_names: Option<BTreeMap<i64, String>>,
    ) -> Result<Dataset> {
        if x.rows() == 0 {
            return Err(Error::InvalidInput("dataset has no samples".into()));
        }
        if x.rows() != y.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} samples but {} labels",
                x.rows(),
                y.len()
            )));
        }
        if !x.all_finite() {
            return Err(Error::InvalidInput(
                "dataset contains non-finite feature values".into(),
            ));
        }
        if let Some(names) = &feature_names {
            if names.len() != x.cols() {
                return Err(Error::ShapeMismatch(format!(
                    "{} feature names for {} columns",
                    names.len(),
                    x.cols()
                )));
            }
        }
        Ok(Dataset {
            x,
            y,
            feature_names,
            label_names,
            label_column_name: None,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.x.rows()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    /// Sorted distinct labels.
    pub fn classes(&self) -> Vec<i64> {
        let mut c = self.y.clone();
        c.sort_unstable();
        c.dedup();
        c
    }

    pub fn class_counts(&self) -> BTreeMap<i64, usize> {
        let mut counts = BTreeMap::new();
        for &label in &self.y {
            *counts.entry(label).or_insert(0) += 1;
        }
        counts
    }

    /// Display text for a label: the original name when known, otherwise the
    /// integer itself.
    pub fn label_display(&self, label: i64) -> String {
        self.label_names
            .as_ref()
            .and_then(|names| names.get(&label).cloned())
            .unwrap_or_else(|| label.to_string())
    }
}

/// How to locate the label column in a CSV file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) {
            Ok(LabelColumn::Index(s.parse().unwrap()))
        } else {
            Ok(LabelColumn::Name(s.to_string()))
        }
    }
}

/// Loads a CSV dataset. Feature cells must parse as finite numbers; the
/// label column may hold arbitrary text. Errors carry 1-based line (and
/// column) locations.
pub fn load_csv(path: &Path, label_column: &LabelColumn, header: bool) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::InvalidInput(format!(
                "cannot open {}: {e}",
                path.display()
            )),
            _ => Error::Serialization(e.to_string()),
        })?;

    let mut records = reader.records();
    let line_of = |record: &csv::StringRecord, fallback: u64| -> u64 {
        record.position().map(|p| p.line()).unwrap_or(fallback)
    };

    let header_row: Option<Vec<String>> = if header {
        match records.next() {
            Some(rec) => {
                let rec = rec.map_err(csv_error)?;
                Some(rec.iter().map(str::to_string).collect())
            }
            None => {
                return Err(Error::InvalidInput(format!(
                    "{} is empty",
                    path.display()
                )))
            }
        }
    } else {
        None
    };

    let mut width: Option<usize> = header_row.as_ref().map(Vec::len);
    let mut label_idx: Option<usize> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();

    for rec in records {
        let rec = rec.map_err(csv_error)?;
        let line = line_of(&rec, rows.len() as u64 + 1 + u64::from(header));
        let expected = *width.get_or_insert(rec.len());
        if rec.len() != expected {
            return Err(Error::CsvFormat {
                line,
                column: None,
                message: format!("row has {} fields, expected {expected}", rec.len()),
            });
        }
        let label_idx = match label_idx {
            Some(idx) => idx,
            None => {
                let idx = resolve_label_index(label_column, header_row.as_deref(), expected)?;
                label_idx = Some(idx);
                idx
            }
        };
        let mut features = Vec::with_capacity(expected - 1);
        for (col, cell) in rec.iter().enumerate() {
            if col == label_idx {
                raw_labels.push(cell.to_string());
                continue;
            }
            let value: f64 = cell.trim().parse().map_err(|_| Error::CsvFormat {
                line,
                column: Some(col + 1),
                message: format!("feature value '{cell}' is not numeric"),
            })?;
            if !value.is_finite() {
                return Err(Error::CsvFormat {
                    line,
                    column: Some(col + 1),
                    message: format!("feature value '{cell}' is not finite"),
                });
            }
            features.push(value);
        }
        rows.push(features);
    }

    if rows.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} contains no data rows",
            path.display()
        )));
    }
    let label_idx = label_idx.expect("set while reading the first row");

    // Dense label ids: numeric label sets sort numerically, otherwise
    // lexicographically.
    let mut distinct: Vec<String> = raw_labels.clone();
    distinct.sort();
    distinct.dedup();
    if distinct.iter().all(|s| s.trim().parse::<i64>().is_ok()) {
        distinct.sort_by_key(|s| s.trim().parse::<i64>().unwrap());
    }
    let id_of: BTreeMap<&str, i64> = distinct
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i as i64))
        .collect();
    let y: Vec<i64> = raw_labels.iter().map(|s| id_of[s.as_str()]).collect();
    let label_names: BTreeMap<i64, String> = distinct
        .iter()
        .enumerate()
        .map(|(i, s)| (i as i64, s.clone()))
        .collect();

    let label_column_name = header_row.as_ref().map(|names| names[label_idx].clone());
    let feature_names = header_row.map(|names| {
        names
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != label_idx)
            .map(|(_, n)| n.clone())
            .collect()
    });

    let mut dataset = Dataset::with_names(
        Matrix::from_rows(&rows)?,
        y,
        feature_names,
        Some(label_names),
    )?;
    dataset.label_column_name = label_column_name;
    Ok(dataset)
}

fn resolve_label_index(
    label_column: &LabelColumn,
    header: Option<&[String]>,
    width: usize,
) -> Result<usize> {
    match label_column {
        LabelColumn::Index(idx) => {
            if *idx >= width {
                Err(Error::InvalidInput(format!(
                    "label column index {idx} is out of range for {width} columns"
                )))
            } else {
                Ok(*idx)
            }
        }
        LabelColumn::Name(name) => match header {
            Some(names) => names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| {
                    Error::InvalidInput(format!("label column '{name}' not found in header"))
                }),
            None => Err(Error::InvalidInput(
                "label column by name requires a header row".into(),
            )),
        },
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::CsvFormat {
        line,
        column: None,
        message: e.to_string(),
    }
}

/// Writes features plus a trailing label column, mirroring the input format:
/// a header row when feature names are given, labels printed through
/// `label_display`.
pub fn write_csv<W: Write>(
    out: &mut W,
    x: &Matrix,
    y: &[i64],
    feature_names: Option<&[String]>,
    label_header: &str,
    label_display: impl Fn(i64) -> String,
) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} rows but {} labels",
            x.rows(),
            y.len()
        )));
    }
    if let Some(names) = feature_names {
        if names.len() != x.cols() {
            return Err(Error::ShapeMismatch(format!(
                "{} feature names for {} columns",
                names.len(),
                x.cols()
            )));
        }
        writeln!(out, "{},{}", names.join(","), label_header)?;
    }
    for (i, &label) in y.iter().enumerate() {
        for v in x.row(i) {
            write!(out, "{v},")?;
        }
        writeln!(out, "{}", label_display(label))?;
    }
    Ok(())
}

/// Per-feature mean/std scaler fitted on training data. Zero-variance
/// features keep divisor 1 so the pipeline's dimensionality is stable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Result<Standardizer> {
        if x.rows() == 0 {
            return Err(Error::InvalidInput(
                "cannot fit a standardizer on an empty matrix".into(),
            ));
        }
        let n = x.rows() as f64;
        let mean = x.col_means();
        let mut std = vec![0.0; x.cols()];
        for i in 0..x.rows() {
            for (acc, (v, mu)) in std.iter_mut().zip(x.row(i).iter().zip(&mean)) {
                *acc += (v - mu) * (v - mu);
            }
        }
        for s in &mut std {
            *s = (*s / n).sqrt();
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        Ok(Standardizer { mean, std })
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        self.check_width(x)?;
        let mut out = x.clone();
        for i in 0..out.rows() {
            for ((v, mu), s) in out.row_mut(i).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - mu) / s;
            }
        }
        Ok(out)
    }

    pub fn inverse_transform(&self, z: &Matrix) -> Result<Matrix> {
        self.check_width(z)?;
        let mut out = z.clone();
        for i in 0..out.rows() {
            for ((v, mu), s) in out.row_mut(i).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = *v * s + mu;
            }
        }
        Ok(out)
    }

    fn check_width(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.mean.len() {
            return Err(Error::ShapeMismatch(format!(
                "input has {} columns but the standardizer was fitted on {}",
                x.cols(),
                self.mean.len()
            )));
        }
        Ok(())
    }
}

/// Stratified k-fold split: returns `k` pairs of (train, test) index sets.
/// Folds partition all indices; per-class test counts differ by at most one
/// across folds. Shuffling within each class is seeded.
pub fn stratified_kfold(
    y: &[i64],
    k: usize,
    seed: u64,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "k-fold needs k >= 2, got {k}"
        )));
    }
    let mut by_class: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &label) in y.iter().enumerate() {
        by_class.entry(label).or_default().push(i);
    }
    for (label, indices) in &by_class {
        if indices.len() < k {
            return Err(Error::InvalidInput(format!(
                "class {label} has {} samples, fewer than k = {k}",
                indices.len()
            )));
        }
    }

    let mut test_folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (class_pos, indices) in by_class.values().enumerate() {
        let mut shuffled = indices.clone();
        let mut rng = derive_rng(seed, &[stream::FOLDS, class_pos as u64]);
        for i in 0..shuffled.len() {
            let j = rng.gen_range(i..shuffled.len());
            shuffled.swap(i, j);
        }
        for (pos, idx) in shuffled.into_iter().enumerate() {
            test_folds[pos % k].push(idx);
        }
    }

    let n = y.len();
    let mut folds = Vec::with_capacity(k);
    for test in &mut test_folds {
        test.sort_unstable();
        let mut in_test = vec![false; n];
        for &i in test.iter() {
            in_test[i] = true;
        }
        let train: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
        folds.push((train, test.clone()));
    }
    Ok(folds)
}

/// Toy dataset families for desk-scale experiments.
#[derive(Clone, Debug, PartialEq)]
pub enum ToySpec {
    /// Two interleaving half-circles in 2-D with Gaussian jitter.
    Moons { noise: f64 },
    /// Isotropic Gaussian clusters with configurable class priors; centers
    /// are drawn uniformly from `[-center_box, center_box]^features`.
    Blobs {
        priors: Vec<f64>,
        features: usize,
        cluster_std: f64,
        center_box: f64,
    },
    /// Gaussian clusters centered on random distinct vertices of the
    /// `{-1, +1}^features` hypercube; the label is the cluster index.
    ClusteredCube {
        clusters: usize,
        features: usize,
        cluster_std: f64,
    },
}

impl ToySpec {
    pub fn moons() -> ToySpec {
        ToySpec::Moons { noise: 0.1 }
    }

    pub fn blobs(priors: Vec<f64>, features: usize) -> ToySpec {
        ToySpec::Blobs {
            priors,
            features,
            cluster_std: 1.0,
            center_box: 10.0,
        }
    }

    pub fn clustered_cube(clusters: usize, features: usize) -> ToySpec {
        ToySpec::ClusteredCube {
            clusters,
            features,
            cluster_std: 1.0,
        }
    }
}

/// Splits `n` into counts proportional to `priors` (largest remainder).
fn proportional_counts(priors: &[f64], n: usize) -> Vec<usize> {
    let total: f64 = priors.iter().sum();
    let exact: Vec<f64> = priors.iter().map(|p| p / total * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut remainder = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..priors.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    let mut cursor = 0;
    while remainder > 0 {
        counts[order[cursor % order.len()]] += 1;
        cursor += 1;
        remainder -= 1;
    }
    counts
}

/// Generates a seeded toy dataset with `n` samples.
pub fn make_toy(spec: &ToySpec, n: usize, seed: u64) -> Result<Dataset> {
    if n < 4 {
        return Err(Error::InvalidInput(format!(
            "toy datasets need at least 4 samples, got {n}"
        )));
    }
    let mut rng = derive_rng(seed, &[stream::TOY]);
    match spec {
        ToySpec::Moons { noise } => {
            if !noise.is_finite() || *noise < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "moons noise must be nonnegative, got {noise}"
                )));
            }
            let n_outer = n - n / 2;
            let n_inner = n / 2;
            let mut rows = Vec::with_capacity(n);
            let mut y = Vec::with_capacity(n);
            let arc = |count: usize, i: usize| {
                std::f64::consts::PI * i as f64 / (count.max(2) - 1) as f64
            };
            for i in 0..n_outer {
                let t = arc(n_outer, i);
                rows.push(vec![t.cos(), t.sin()]);
                y.push(0);
            }
            for i in 0..n_inner {
                let t = arc(n_inner, i);
                rows.push(vec![1.0 - t.cos(), 0.5 - t.sin()]);
                y.push(1);
            }
            for row in &mut rows {
                for v in row.iter_mut() {
                    let e: f64 = rng.sample(StandardNormal);
                    *v += noise * e;
                }
            }
            Dataset::new(Matrix::from_rows(&rows)?, y)
        }
        ToySpec::Blobs {
            priors,
            features,
            cluster_std,
            center_box,
        } => {
            if priors.is_empty() || priors.iter().any(|&p| !p.is_finite() || p <= 0.0) {
                return Err(Error::InvalidInput(
                    "blob priors must be nonempty and positive".into(),
                ));
            }
            if *features == 0 {
                return Err(Error::InvalidInput("blobs need at least 1 feature".into()));
            }
            let scale_ok = |v: f64| v.is_finite() && v > 0.0;
            if !scale_ok(*cluster_std) || !scale_ok(*center_box) {
                return Err(Error::InvalidInput(
                    "blob cluster_std and center_box must be positive".into(),
                ));
            }
            let counts = proportional_counts(priors, n);
            let centers: Vec<Vec<f64>> = (0..priors.len())
                .map(|_| {
                    (0..*features)
                        .map(|_| rng.gen_range(-center_box..*center_box))
                        .collect()
                })
                .collect();
            let mut rows = Vec::with_capacity(n);
            let mut y = Vec::with_capacity(n);
            for (class, (&count, center)) in counts.iter().zip(&centers).enumerate() {
                for _ in 0..count {
                    let row: Vec<f64> = center
                        .iter()
                        .map(|c| {
                            let e: f64 = rng.sample(StandardNormal);
                            c + cluster_std * e
                        })
                        .collect();
                    rows.push(row);
                    y.push(class as i64);
                }
            }
            Dataset::new(Matrix::from_rows(&rows)?, y)
        }
        ToySpec::ClusteredCube {
            clusters,
            features,
            cluster_std,
        } => {
            if *clusters == 0 || *features == 0 {
                return Err(Error::InvalidInput(
                    "clustered cube needs at least 1 cluster and 1 feature".into(),
                ));
            }
            if *features < 63 && *clusters > (1usize << *features) {
                return Err(Error::InvalidInput(format!(
                    "{clusters} distinct vertices do not exist in {features} dimensions"
                )));
            }
            if !cluster_std.is_finite() || *cluster_std <= 0.0 {
                return Err(Error::InvalidInput(
                    "clustered cube cluster_std must be positive".into(),
                ));
            }
            let mut vertices: Vec<Vec<f64>> = Vec::with_capacity(*clusters);
            while vertices.len() < *clusters {
                let v: Vec<f64> = (0..*features)
                    .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                    .collect();
                if !vertices.contains(&v) {
                    vertices.push(v);
                }
            }
            let priors = vec![1.0; *clusters];
            let counts = proportional_counts(&priors, n);
            let mut rows = Vec::with_capacity(n);
            let mut y = Vec::with_capacity(n);
            for (class, (&count, vertex)) in counts.iter().zip(&vertices).enumerate() {
                for _ in 0..count {
                    let row: Vec<f64> = vertex
                        .iter()
                        .map(|c| {
                            let e: f64 = rng.sample(StandardNormal);
                            c + cluster_std * e
                        })
                        .collect();
                    rows.push(row);
                    y.push(class as i64);
                }
            }
            Dataset::new(Matrix::from_rows(&rows)?, y)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn loads_small_csv_with_header() {
        let f = write_temp("a,b,label\n1.0,2.0,x\n3.0,4.0,y\n5.5,6.5,x\n");
        let ds = load_csv(f.path(), &LabelColumn::Name("label".into()), true).unwrap();
        assert_eq!(ds.n_samples(), 3);
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.y, vec![0, 1, 0]);
        assert_eq!(ds.feature_names.as_deref(), Some(&["a".to_string(), "b".to_string()][..]));
        assert_eq!(ds.label_display(1), "y");
    }

    #[test]
    fn label_by_name_matches_label_by_index() {
        let content = "a,b,label\n1.0,2.0,x\n3.0,4.0,y\n";
        let f = write_temp(content);
        let by_name = load_csv(f.path(), &LabelColumn::Name("label".into()), true).unwrap();
        let by_index = load_csv(f.path(), &LabelColumn::Index(2), true).unwrap();
        assert_eq!(by_name.x, by_index.x);
        assert_eq!(by_name.y, by_index.y);
    }

    #[test]
    fn ragged_row_names_its_line() {
        let f = write_temp("a,b,label\n1.0,2.0,x\n3.0,y\n");
        let err = load_csv(f.path(), &LabelColumn::Index(2), true).unwrap_err();
        match err {
            Error::CsvFormat { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_names_row_and_column() {
        let f = write_temp("1.0,oops,x\n2.0,3.0,y\n");
        let err = load_csv(f.path(), &LabelColumn::Index(2), false).unwrap_err();
        match err {
            Error::CsvFormat { line, column, .. } => {
                assert_eq!(line, 1);
                assert_eq!(column, Some(2));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_finite_cells_are_rejected() {
        let f = write_temp("1.0,NaN,x\n");
        assert!(load_csv(f.path(), &LabelColumn::Index(2), false).is_err());
        let f = write_temp("1.0,inf,x\n");
        assert!(load_csv(f.path(), &LabelColumn::Index(2), false).is_err());
    }

    #[test]
    fn missing_file_and_empty_file_error() {
        assert!(load_csv(
            Path::new("/nonexistent/file.csv"),
            &LabelColumn::Index(0),
            false
        )
        .is_err());
        let f = write_temp("");
        assert!(load_csv(f.path(), &LabelColumn::Index(0), false).is_err());
        let f = write_temp("a,b,label\n");
        assert!(load_csv(f.path(), &LabelColumn::Index(2), true).is_err());
    }

    #[test]
    fn numeric_labels_sort_numerically() {
        let f = write_temp("1.0,10\n2.0,2\n3.0,10\n");
        let ds = load_csv(f.path(), &LabelColumn::Index(1), false).unwrap();
        // "2" gets id 0, "10" gets id 1.
        assert_eq!(ds.y, vec![1, 0, 1]);
        assert_eq!(ds.label_display(0), "2");
    }

    #[test]
    fn write_csv_roundtrips_through_load() {
        let ds = make_toy(&ToySpec::moons(), 20, 3).unwrap();
        let mut buf = Vec::new();
        write_csv(
            &mut buf,
            &ds.x,
            &ds.y,
            Some(&["f0".to_string(), "f1".to_string()]),
            "label",
            |l| l.to_string(),
        )
        .unwrap();
        let f = write_temp(std::str::from_utf8(&buf).unwrap());
        let back = load_csv(f.path(), &LabelColumn::Name("label".into()), true).unwrap();
        assert_eq!(back.x, ds.x);
        assert_eq!(back.y, ds.y);
    }

    #[test]
    fn standardizer_centers_and_scales() {
        let ds = make_toy(&ToySpec::blobs(vec![0.5, 0.5], 3), 50, 9).unwrap();
        let scaler = Standardizer::fit(&ds.x).unwrap();
        let z = scaler.transform(&ds.x).unwrap();
        let n = z.rows() as f64;
        for j in 0..z.cols() {
            let col = z.column(j);
            let mu: f64 = col.iter().sum::<f64>() / n;
            let var: f64 = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
            assert!(mu.abs() < 1e-10, "mean {mu}");
            assert!((var.sqrt() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_feature_keeps_unit_divisor() {
        let x = Matrix::from_rows(&[vec![3.0, 1.0], vec![3.0, 2.0], vec![3.0, 3.0]]).unwrap();
        let scaler = Standardizer::fit(&x).unwrap();
        assert_eq!(scaler.std[0], 1.0);
        let z = scaler.transform(&x).unwrap();
        assert!(z.column(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fold_counts_are_balanced_per_class() {
        let y: Vec<i64> = (0..10).map(|i| i % 2).collect();
        let folds = stratified_kfold(&y, 5, 1).unwrap();
        assert_eq!(folds.len(), 5);
        for (train, test) in &folds {
            assert_eq!(test.len(), 2);
            assert_eq!(train.len(), 8);
            let zeros = test.iter().filter(|&&i| y[i] == 0).count();
            assert_eq!(zeros, 1);
        }
    }

    #[test]
    fn small_class_is_rejected() {
        let y = vec![0, 0, 0, 0, 1, 1, 1, 1, 1];
        assert!(stratified_kfold(&y, 5, 1).is_err());
    }

    #[test]
    fn moons_counts_and_shape() {
        let ds = make_toy(&ToySpec::moons(), 200, 5).unwrap();
        assert_eq!(ds.n_samples(), 200);
        assert_eq!(ds.n_features(), 2);
        let counts = ds.class_counts();
        assert_eq!(counts[&0], 100);
        assert_eq!(counts[&1], 100);
    }

    #[test]
    fn blobs_respect_priors() {
        let ds = make_toy(&ToySpec::blobs(vec![0.9, 0.1], 2), 100, 6).unwrap();
        let counts = ds.class_counts();
        assert_eq!(counts[&0], 90);
        assert_eq!(counts[&1], 10);
    }

    #[test]
    fn clustered_cube_has_requested_dimensions() {
        let ds = make_toy(&ToySpec::clustered_cube(4, 20), 100, 7).unwrap();
        assert_eq!(ds.n_features(), 20);
        assert_eq!(ds.n_samples(), 100);
        assert_eq!(ds.classes(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn toys_are_seed_deterministic() {
        for spec in [
            ToySpec::moons(),
            ToySpec::blobs(vec![0.7, 0.3], 4),
            ToySpec::clustered_cube(3, 6),
        ] {
            let a = make_toy(&spec, 40, 11).unwrap();
            let b = make_toy(&spec, 40, 11).unwrap();
            assert_eq!(a, b);
            let c = make_toy(&spec, 40, 12).unwrap();
            assert_ne!(a.x, c.x);
        }
    }

    #[test]
    fn invalid_toy_params_error() {
        assert!(make_toy(&ToySpec::Moons { noise: -0.5 }, 20, 1).is_err());
        assert!(make_toy(&ToySpec::blobs(vec![], 2), 20, 1).is_err());
        assert!(make_toy(&ToySpec::clustered_cube(5, 2), 20, 1).is_err());
        assert!(make_toy(&ToySpec::moons(), 3, 1).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_all_indices(seed in 0u64..100, n_per_class in 5usize..20) {
            let y: Vec<i64> = (0..n_per_class * 3).map(|i| (i % 3) as i64).collect();
            let folds = stratified_kfold(&y, 5, seed).unwrap();
            let mut seen = vec![0usize; y.len()];
            for (train, test) in &folds {
                for &i in test {
                    seen[i] += 1;
                }
                // Train and test are disjoint and cover everything.
                let mut all: Vec<usize> = train.iter().chain(test).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..y.len()).collect::<Vec<_>>());
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
        }

        #[test]
        fn standardizer_roundtrip_is_identity(seed in 0u64..100) {
            let ds = make_toy(&ToySpec::blobs(vec![0.6, 0.4], 3), 30, seed).unwrap();
            let scaler = Standardizer::fit(&ds.x).unwrap();
            let z = scaler.transform(&ds.x).unwrap();
            let back = scaler.inverse_transform(&z).unwrap();
            prop_assert!(back.max_abs_diff(&ds.x) < 1e-12);
        }
    }
}
