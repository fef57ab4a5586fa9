//! Classification-benefit evaluation: twin classifiers trained on real vs
//! synthetic data, scored with balanced accuracy on a held-out real fold,
//! over a stratified cross-validation protocol.
//!
//! Per fold, everything fitted (standardizer, optional PCA basis, generator)
//! is a function of the training fold only. In the PCA pipeline the whole
//! comparison runs in component space, while distribution similarity is
//! measured after inverse-transforming the synthetic points back to the
//! standardized original space.

use serde::{Deserialize, Serialize};

use crate::data::{stratified_kfold, Dataset, Standardizer};
use crate::error::{Error, Result};
use crate::generator::{fit as dimso_fit, DimsoConfig, DimsoModel};
use crate::matrix::Matrix;
use crate::metrics::{per_class_similarity, SimilarityReport};
use crate::nn::{AdamConfig, MlpNetwork};
use crate::pca::{pca_fit, pca_inverse, pca_transform, PcaModel};
use crate::rng::{derive_seed, stream};
use crate::smote::{smote_generate, SmoteConfig};

/// Balanced accuracy: the unweighted mean recall over the classes present in
/// `y_true`.
pub fn balanced_accuracy(y_true: &[i64], y_pred: &[i64]) -> Result<f64> {
    if y_true.is_empty() {
        return Err(Error::InvalidInput(
            "balanced accuracy needs at least one sample".into(),
        ));
    }
    if y_true.len() != y_pred.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut classes: Vec<i64> = y_true.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut recall_sum = 0.0;
    for &c in &classes {
        let mut total = 0usize;
        let mut correct = 0usize;
        for (&t, &p) in y_true.iter().zip(y_pred) {
            if t == c {
                total += 1;
                if p == c {
                    correct += 1;
                }
            }
        }
        recall_sum += correct as f64 / total as f64;
    }
    Ok(recall_sum / classes.len() as f64)
}

/// Gaussian naive Bayes with per-feature variance smoothing.
#[derive(Clone, Debug, PartialEq)]
pub struct GnbModel {
    classes: Vec<i64>,
    log_priors: Vec<f64>,
    means: Matrix,
    /// Smoothed per-class, per-feature variances.
    variances: Matrix,
}

const GNB_VAR_SMOOTHING: f64 = 1e-9;

/// Fits per-class Gaussian likelihoods: feature means and (population)
/// variances plus a smoothing term of `1e-9` times the largest per-feature
/// variance of the whole training matrix; class priors are frequencies.
pub fn train_gnb(x: &Matrix, y: &[i64]) -> Result<GnbModel> {
    if x.rows() == 0 {
        return Err(Error::InvalidInput("cannot train on an empty matrix".into()));
    }
    if x.rows() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} samples but {} labels",
            x.rows(),
            y.len()
        )));
    }
    let mut classes: Vec<i64> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();

    // Smoothing scale from the pooled training data.
    let n = x.rows() as f64;
    let pooled_mean = x.col_means();
    let mut max_var = 0.0f64;
    for j in 0..x.cols() {
        let var = (0..x.rows())
            .map(|i| {
                let d = x[(i, j)] - pooled_mean[j];
                d * d
            })
            .sum::<f64>()
            / n;
        max_var = max_var.max(var);
    }
    let epsilon = if max_var > 0.0 {
        GNB_VAR_SMOOTHING * max_var
    } else {
        GNB_VAR_SMOOTHING
    };

    let mut means = Matrix::zeros(classes.len(), x.cols());
    let mut variances = Matrix::zeros(classes.len(), x.cols());
    let mut log_priors = Vec::with_capacity(classes.len());
    for (ci, &c) in classes.iter().enumerate() {
        let idx: Vec<usize> = y
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == c)
            .map(|(i, _)| i)
            .collect();
        let rows = x.select_rows(&idx);
        let nc = rows.rows() as f64;
        let mu = rows.col_means();
        for j in 0..x.cols() {
            let var = (0..rows.rows())
                .map(|i| {
                    let d = rows[(i, j)] - mu[j];
                    d * d
                })
                .sum::<f64>()
                / nc;
            means[(ci, j)] = mu[j];
            variances[(ci, j)] = var + epsilon;
        }
        log_priors.push((nc / n).ln());
    }
    Ok(GnbModel {
        classes,
        log_priors,
        means,
        variances,
    })
}

impl GnbModel {
    /// Log joint density `log p(class) + log p(x | class)` per class, in
    /// class order.
    pub fn log_joint(&self, row: &[f64]) -> Vec<f64> {
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        self.classes
            .iter()
            .enumerate()
            .map(|(ci, _)| {
                let mut score = self.log_priors[ci];
                for (j, &v) in row.iter().enumerate() {
                    let var = self.variances[(ci, j)];
                    let d = v - self.means[(ci, j)];
                    score += -0.5 * (ln_2pi + var.ln()) - d * d / (2.0 * var);
                }
                score
            })
            .collect()
    }

    /// Argmax of the posterior; exact ties go to the lowest label.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<i64>> {
        if x.cols() != self.means.cols() {
            return Err(Error::ShapeMismatch(format!(
                "input has {} features but the model was trained on {}",
                x.cols(),
                self.means.cols()
            )));
        }
        Ok((0..x.rows())
            .map(|i| {
                let scores = self.log_joint(x.row(i));
                let mut best = 0;
                for (ci, &s) in scores.iter().enumerate() {
                    if s > scores[best] {
                        best = ci;
                    }
                }
                self.classes[best]
            })
            .collect())
    }
}

/// Single-hidden-layer (100 ReLU units) softmax classifier trained with Adam
/// for a fixed 200 full-batch epochs.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpClassifier {
    network: MlpNetwork,
    classes: Vec<i64>,
}

const MLP_HIDDEN: usize = 100;
const MLP_EPOCHS: usize = 200;

pub fn train_mlp_classifier(x: &Matrix, y: &[i64], seed: u64) -> Result<MlpClassifier> {
    if x.rows() == 0 {
        return Err(Error::InvalidInput("cannot train on an empty matrix".into()));
    }
    if x.rows() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} samples but {} labels",
            x.rows(),
            y.len()
        )));
    }
    let mut classes: Vec<i64> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let class_pos: std::collections::BTreeMap<i64, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, &c)| (c, i))
        .collect();

    let mut network = MlpNetwork::with_dims(&[x.cols(), MLP_HIDDEN, classes.len()], seed)?;
    let adam = AdamConfig::default();
    let n = x.rows();
    let inv_n = 1.0 / n as f64;
    for _ in 0..MLP_EPOCHS {
        let (logits, tape) = network.forward(x)?;
        // Softmax cross-entropy gradient: (softmax - onehot) / n.
        let mut grad = Matrix::zeros(n, classes.len());
        for i in 0..n {
            let row = logits.row(i);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut denom = 0.0;
            for &v in row {
                denom += (v - max).exp();
            }
            let target = class_pos[&y[i]];
            for (k, &v) in row.iter().enumerate() {
                let p = (v - max).exp() / denom;
                grad[(i, k)] = (p - if k == target { 1.0 } else { 0.0 }) * inv_n;
            }
        }
        network.backward_and_step(&tape, &grad, &adam)?;
    }
    Ok(MlpClassifier { network, classes })
}

impl MlpClassifier {
    /// Argmax over output logits; exact ties go to the lowest label.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<i64>> {
        let (logits, _) = self.network.forward(x)?;
        Ok((0..logits.rows())
            .map(|i| {
                let row = logits.row(i);
                let mut best = 0;
                for (k, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = k;
                    }
                }
                self.classes[best]
            })
            .collect())
    }
}

/// Which classifier the protocol trains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierSpec {
    Gnb,
    Mlp,
}

/// A trained classifier of either kind.
#[derive(Clone, Debug)]
pub enum TrainedClassifier {
    Gnb(GnbModel),
    Mlp(MlpClassifier),
}

impl TrainedClassifier {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<i64>> {
        match self {
            TrainedClassifier::Gnb(m) => m.predict(x),
            TrainedClassifier::Mlp(m) => m.predict(x),
        }
    }
}

pub fn train_classifier(
    spec: ClassifierSpec,
    x: &Matrix,
    y: &[i64],
    seed: u64,
) -> Result<TrainedClassifier> {
    Ok(match spec {
        ClassifierSpec::Gnb => TrainedClassifier::Gnb(train_gnb(x, y)?),
        ClassifierSpec::Mlp => TrainedClassifier::Mlp(train_mlp_classifier(x, y, seed)?),
    })
}

/// Which generator supplies the synthetic training data.
#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorSpec {
    /// Distribution-mapping generator; the embedded seed is replaced by a
    /// per-fold seed derived from the protocol seed.
    Dimso(DimsoConfig),
    /// SMOTE baseline; seed handled as for `Dimso`.
    Smote(SmoteConfig),
    /// Synthetic data is a verbatim copy of the training fold.
    Identity,
}

/// Whether the protocol runs on standardized features or PCA components.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PipelineKind {
    Raw,
    Pca,
}

impl std::fmt::Display for PipelineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PipelineKind::Raw => write!(f, "raw"),
            PipelineKind::Pca => write!(f, "pca"),
        }
    }
}

/// Protocol parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub folds: usize,
    pub pipeline: PipelineKind,
    /// Explained-variance threshold for the PCA pipeline.
    pub pca_threshold: f64,
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            folds: 5,
            pipeline: PipelineKind::Raw,
            pca_threshold: 0.70,
            seed: 0,
        }
    }
}

/// Everything fitted on one training fold, plus the fold's processed views.
/// Fitted parameters depend only on the training fold and the fold seed.
pub struct FoldArtifacts {
    pub standardizer: Standardizer,
    pub pca: Option<PcaModel>,
    /// Training fold in the space classifiers operate in (standardized, or
    /// PCA components).
    pub x_train: Matrix,
    pub y_train: Vec<i64>,
    /// Test fold in the same space.
    pub x_test: Matrix,
    pub y_test: Vec<i64>,
    /// Training fold in standardized original space (similarity basis).
    pub x_train_standardized: Matrix,
    /// Synthetic data in the classifier space.
    pub x_syn: Matrix,
    pub y_syn: Vec<i64>,
    pub dimso_model: Option<DimsoModel>,
}

impl FoldArtifacts {
    /// Synthetic data expressed in the standardized original space (the PCA
    /// pipeline inverse-transforms the components).
    pub fn synthetic_in_standardized_space(&self) -> Result<Matrix> {
        match &self.pca {
            Some(model) => pca_inverse(model, &self.x_syn),
            None => Ok(self.x_syn.clone()),
        }
    }
}

/// Fits one fold: standardizer on the training rows, optional PCA, then the
/// generator, all strictly from the training fold.
pub fn fit_fold(
    dataset: &Dataset,
    train_idx: &[usize],
    test_idx: &[usize],
    generator: &GeneratorSpec,
    pipeline: PipelineKind,
    pca_threshold: f64,
    generator_seed: u64,
) -> Result<FoldArtifacts> {
    let x_train_raw = dataset.x.select_rows(train_idx);
    let y_train: Vec<i64> = train_idx.iter().map(|&i| dataset.y[i]).collect();
    let x_test_raw = dataset.x.select_rows(test_idx);
    let y_test: Vec<i64> = test_idx.iter().map(|&i| dataset.y[i]).collect();

    let standardizer = Standardizer::fit(&x_train_raw)?;
    let x_train_standardized = standardizer.transform(&x_train_raw)?;
    let x_test_standardized = standardizer.transform(&x_test_raw)?;

    let (pca, x_train, x_test) = match pipeline {
        PipelineKind::Raw => (None, x_train_standardized.clone(), x_test_standardized),
        PipelineKind::Pca => {
            let model = pca_fit(&x_train_standardized, pca_threshold)?;
            let train = pca_transform(&model, &x_train_standardized)?;
            let test = pca_transform(&model, &x_test_standardized)?;
            (Some(model), train, test)
        }
    };

    let (x_syn, y_syn, dimso_model) = match generator {
        GeneratorSpec::Dimso(config) => {
            let cfg = DimsoConfig {
                seed: generator_seed,
                ..*config
            };
            let model = dimso_fit(&x_train, &y_train, &cfg)?;
            let (x_syn, y_syn) = model.generate()?;
            (x_syn, y_syn, Some(model))
        }
        GeneratorSpec::Smote(config) => {
            let cfg = SmoteConfig {
                seed: generator_seed,
                ..*config
            };
            let out = smote_generate(&x_train, &y_train, &cfg)?;
            (out.x_syn, out.y_syn, None)
        }
        GeneratorSpec::Identity => (x_train.clone(), y_train.clone(), None),
    };

    Ok(FoldArtifacts {
        standardizer,
        pca,
        x_train,
        y_train,
        x_test,
        y_test,
        x_train_standardized,
        x_syn,
        y_syn,
        dimso_model,
    })
}

/// One fold's scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub bac_real: f64,
    pub bac_syn: f64,
    pub delta_q: f64,
    pub similarity: SimilarityReport,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> MeanStd {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    MeanStd {
        mean,
        std: var.sqrt(),
    }
}

/// Fold-aggregated scores (mean and population standard deviation).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub bac_real: MeanStd,
    pub bac_syn: MeanStd,
    pub delta_q: MeanStd,
    pub wd: MeanStd,
    pub mmd: MeanStd,
    pub mean_nn: MeanStd,
}

/// Per-epoch generator losses for one fold (present for the distribution
/// mapping generator only).
#[derive(Clone, Debug, PartialEq)]
pub struct FoldTrainingLog {
    pub fold: usize,
    pub class_labels: Vec<i64>,
    pub losses: Vec<Vec<f64>>,
}

/// Full protocol report: per-fold scores, aggregates, and (in memory only)
/// the generator training logs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub pipeline: PipelineKind,
    pub folds: Vec<FoldResult>,
    pub aggregates: Aggregates,
    #[serde(skip)]
    pub training_logs: Vec<FoldTrainingLog>,
}

impl EvalReport {
    /// Flat per-fold CSV for external plotting.
    pub fn per_fold_csv(&self) -> String {
        let mut out = String::from("fold,bac_real,bac_syn,delta_q,wd,mmd,mean_nn\n");
        for f in &self.folds {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                f.fold,
                f.bac_real,
                f.bac_syn,
                f.delta_q,
                f.similarity.wd,
                f.similarity.mmd,
                f.similarity.mean_nn
            ));
        }
        out
    }
}

/// Runs the full protocol: stratified folds, per-fold standardization
/// (+ optional PCA), generator fitting, twin classifiers, balanced accuracy
/// on the real test fold, and per-class similarity in standardized space.
pub fn run_protocol(
    dataset: &Dataset,
    generator: &GeneratorSpec,
    classifier: ClassifierSpec,
    proto: &ProtocolConfig,
) -> Result<EvalReport> {
    if !proto.pca_threshold.is_finite() || proto.pca_threshold <= 0.0 || proto.pca_threshold > 1.0 {
        return Err(Error::InvalidInput(format!(
            "pca threshold must lie in (0, 1], got {}",
            proto.pca_threshold
        )));
    }
    let folds = stratified_kfold(&dataset.y, proto.folds, proto.seed)?;
    let mut fold_results = Vec::with_capacity(folds.len());
    let mut training_logs = Vec::new();

    for (fold, (train_idx, test_idx)) in folds.iter().enumerate() {
        let generator_seed = derive_seed(proto.seed, &[stream::PROTOCOL_GENERATOR, fold as u64]);
        let classifier_seed = derive_seed(proto.seed, &[stream::PROTOCOL_CLASSIFIER, fold as u64]);
        let artifacts = fit_fold(
            dataset,
            train_idx,
            test_idx,
            generator,
            proto.pipeline,
            proto.pca_threshold,
            generator_seed,
        )?;

        let psi_real = train_classifier(
            classifier,
            &artifacts.x_train,
            &artifacts.y_train,
            classifier_seed,
        )?;
        let psi_syn = train_classifier(
            classifier,
            &artifacts.x_syn,
            &artifacts.y_syn,
            classifier_seed,
        )?;
        let bac_real = balanced_accuracy(&artifacts.y_test, &psi_real.predict(&artifacts.x_test)?)?;
        let bac_syn = balanced_accuracy(&artifacts.y_test, &psi_syn.predict(&artifacts.x_test)?)?;

        let syn_std_space = artifacts.synthetic_in_standardized_space()?;
        let similarity = per_class_similarity(
            &artifacts.x_train_standardized,
            &artifacts.y_train,
            &syn_std_space,
            &artifacts.y_syn,
        )?;

        if let Some(model) = &artifacts.dimso_model {
            training_logs.push(FoldTrainingLog {
                fold,
                class_labels: model.class_labels().to_vec(),
                losses: model.training_log().to_vec(),
            });
        }
        fold_results.push(FoldResult {
            fold,
            bac_real,
            bac_syn,
            delta_q: bac_syn - bac_real,
            similarity,
        });
    }

    let aggregates = Aggregates {
        bac_real: mean_std(fold_results.iter().map(|f| f.bac_real)),
        bac_syn: mean_std(fold_results.iter().map(|f| f.bac_syn)),
        delta_q: mean_std(fold_results.iter().map(|f| f.delta_q)),
        wd: mean_std(fold_results.iter().map(|f| f.similarity.wd)),
        mmd: mean_std(fold_results.iter().map(|f| f.similarity.mmd)),
        mean_nn: mean_std(fold_results.iter().map(|f| f.similarity.mean_nn)),
    };
    Ok(EvalReport {
        pipeline: proto.pipeline,
        folds: fold_results,
        aggregates,
        training_logs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_toy, ToySpec};
    use crate::losses::LossKind;

    #[test]
    fn bac_perfect_and_hand_examples() {
        assert_eq!(balanced_accuracy(&[0, 1, 1, 0], &[0, 1, 1, 0]).unwrap(), 1.0);
        // Class 0 recall 1.0, class 1 recall 0.5.
        let bac = balanced_accuracy(&[0, 0, 1, 1], &[0, 0, 1, 0]).unwrap();
        assert!((bac - 0.75).abs() < 1e-15);
    }

    #[test]
    fn bac_constant_predictor_scores_half() {
        let y_true = vec![0, 0, 0, 0, 0, 0, 0, 0, 0, 1];
        let y_pred = vec![0; 10];
        assert!((balanced_accuracy(&y_true, &y_pred).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bac_is_relabeling_invariant() {
        let y_true = vec![0, 0, 1, 1, 2, 2];
        let y_pred = vec![0, 1, 1, 1, 2, 0];
        let relabel = |l: i64| [7, 3, 5][l as usize];
        let t2: Vec<i64> = y_true.iter().map(|&l| relabel(l)).collect();
        let p2: Vec<i64> = y_pred.iter().map(|&l| relabel(l)).collect();
        assert_eq!(
            balanced_accuracy(&y_true, &y_pred).unwrap(),
            balanced_accuracy(&t2, &p2).unwrap()
        );
    }

    #[test]
    fn bac_rejects_bad_inputs() {
        assert!(balanced_accuracy(&[], &[]).is_err());
        assert!(balanced_accuracy(&[0, 1], &[0]).is_err());
    }

    #[test]
    fn gnb_separates_distant_gaussians() {
        // Two 1-D Gaussians 10 sigma apart.
        let mut rows = Vec::new();
        let mut y = Vec::new();
        let mut rng = crate::rng::derive_rng(5, &[99]);
        use rand_distr::Distribution;
        let normal = rand_distr::StandardNormal;
        for _ in 0..30 {
            let e: f64 = normal.sample(&mut rng);
            rows.push(vec![e]);
            y.push(0);
        }
        for _ in 0..30 {
            let e: f64 = normal.sample(&mut rng);
            rows.push(vec![10.0 + e]);
            y.push(1);
        }
        let x = Matrix::from_rows(&rows).unwrap();
        let model = train_gnb(&x, &y).unwrap();
        let pred = model.predict(&x).unwrap();
        assert_eq!(balanced_accuracy(&y, &pred).unwrap(), 1.0);
    }

    #[test]
    fn gnb_matches_direct_density_oracle() {
        let x = Matrix::from_rows(&[
            vec![0.0, 1.0],
            vec![0.4, 0.8],
            vec![0.2, 1.2],
            vec![3.0, -1.0],
            vec![3.4, -0.6],
        ])
        .unwrap();
        let y = vec![0, 0, 0, 1, 1];
        let model = train_gnb(&x, &y).unwrap();

        // Independent density computation from the raw formulas.
        let class_idx = [vec![0usize, 1, 2], vec![3usize, 4]];
        let pooled_var = |j: usize| {
            let col = x.column(j);
            let mu: f64 = col.iter().sum::<f64>() / col.len() as f64;
            col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / col.len() as f64
        };
        let eps = 1e-9 * pooled_var(0).max(pooled_var(1));
        let probe = Matrix::from_rows(&[vec![0.1, 0.9], vec![2.9, -0.9], vec![1.5, 0.0]]).unwrap();
        let mut expected = Vec::new();
        for p in 0..probe.rows() {
            let mut best = (f64::NEG_INFINITY, 0i64);
            for (c, idx) in class_idx.iter().enumerate() {
                let prior = idx.len() as f64 / 5.0;
                let mut score = prior.ln();
                for j in 0..2 {
                    let vals: Vec<f64> = idx.iter().map(|&i| x[(i, j)]).collect();
                    let mu: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
                    let var = vals.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>()
                        / vals.len() as f64
                        + eps;
                    let d: f64 = probe[(p, j)] - mu;
                    score += -0.5 * ((2.0 * std::f64::consts::PI * var).ln()) - d * d / (2.0 * var);
                }
                if score > best.0 {
                    best = (score, c as i64);
                }
            }
            expected.push(best.1);
        }
        assert_eq!(model.predict(&probe).unwrap(), expected);
    }

    #[test]
    fn gnb_ties_break_to_lowest_label() {
        // Perfectly symmetric classes; the probe at the midpoint ties.
        let x = Matrix::from_rows(&[vec![-1.0], vec![-2.0], vec![1.0], vec![2.0]]).unwrap();
        let y = vec![3, 3, 8, 8];
        let model = train_gnb(&x, &y).unwrap();
        let pred = model.predict(&Matrix::from_rows(&[vec![0.0]]).unwrap()).unwrap();
        assert_eq!(pred, vec![3]);
    }

    #[test]
    fn mlp_learns_separable_blobs() {
        let mut successes = Vec::new();
        for seed in 0..5u64 {
            let ds = make_toy(&ToySpec::blobs(vec![0.5, 0.5], 2), 60, 17).unwrap();
            let scaler = Standardizer::fit(&ds.x).unwrap();
            let z = scaler.transform(&ds.x).unwrap();
            let clf = train_mlp_classifier(&z, &ds.y, seed).unwrap();
            let bac = balanced_accuracy(&ds.y, &clf.predict(&z).unwrap()).unwrap();
            successes.push(bac);
        }
        successes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(successes[2] >= 0.95, "median BAC {successes:?}");
    }

    #[test]
    fn identity_generator_gives_zero_delta_q() {
        let ds = make_toy(&ToySpec::blobs(vec![0.6, 0.4], 2), 60, 19).unwrap();
        for classifier in [ClassifierSpec::Gnb, ClassifierSpec::Mlp] {
            let report = run_protocol(
                &ds,
                &GeneratorSpec::Identity,
                classifier,
                &ProtocolConfig {
                    seed: 3,
                    ..ProtocolConfig::default()
                },
            )
            .unwrap();
            assert_eq!(report.folds.len(), 5);
            for fold in &report.folds {
                assert_eq!(fold.delta_q, 0.0, "classifier {classifier:?}");
                assert_eq!(fold.bac_real, fold.bac_syn);
            }
        }
    }

    #[test]
    fn report_aggregates_match_folds() {
        let ds = make_toy(&ToySpec::blobs(vec![0.7, 0.3], 2), 50, 23).unwrap();
        let report = run_protocol(
            &ds,
            &GeneratorSpec::Smote(SmoteConfig {
                samples_per_class: 30,
                ..SmoteConfig::default()
            }),
            ClassifierSpec::Gnb,
            &ProtocolConfig {
                seed: 5,
                ..ProtocolConfig::default()
            },
        )
        .unwrap();
        assert_eq!(report.folds.len(), 5);
        let mean: f64 = report.folds.iter().map(|f| f.delta_q).sum::<f64>() / 5.0;
        assert!((report.aggregates.delta_q.mean - mean).abs() < 1e-12);
        let var: f64 = report
            .folds
            .iter()
            .map(|f| (f.delta_q - mean) * (f.delta_q - mean))
            .sum::<f64>()
            / 5.0;
        assert!((report.aggregates.delta_q.std - var.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn protocol_is_deterministic() {
        let ds = make_toy(&ToySpec::blobs(vec![0.5, 0.5], 2), 40, 29).unwrap();
        let proto = ProtocolConfig {
            seed: 11,
            ..ProtocolConfig::default()
        };
        let gen = GeneratorSpec::Smote(SmoteConfig {
            samples_per_class: 20,
            ..SmoteConfig::default()
        });
        let a = run_protocol(&ds, &gen, ClassifierSpec::Gnb, &proto).unwrap();
        let b = run_protocol(&ds, &gen, ClassifierSpec::Gnb, &proto).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dimso_generator_flows_through_both_pipelines() {
        let ds = make_toy(&ToySpec::blobs(vec![0.5, 0.5], 3), 50, 31).unwrap();
        let gen = GeneratorSpec::Dimso(DimsoConfig {
            epochs: 20,
            samples_per_class: 20,
            loss: LossKind::Rae,
            ..DimsoConfig::default()
        });
        for pipeline in [PipelineKind::Raw, PipelineKind::Pca] {
            let report = run_protocol(
                &ds,
                &gen,
                ClassifierSpec::Gnb,
                &ProtocolConfig {
                    pipeline,
                    seed: 13,
                    ..ProtocolConfig::default()
                },
            )
            .unwrap();
            assert_eq!(report.folds.len(), 5);
            assert_eq!(report.training_logs.len(), 5);
            for log in &report.training_logs {
                assert_eq!(log.losses.len(), 2);
                assert!(log.losses.iter().all(|l| l.len() == 20));
            }
            for fold in &report.folds {
                assert!(fold.bac_real >= 0.0 && fold.bac_real <= 1.0);
                assert!(fold.delta_q >= -1.0 && fold.delta_q <= 1.0);
                assert!(fold.similarity.mmd.is_finite());
            }
        }
    }

    #[test]
    fn fitted_parameters_ignore_the_test_fold() {
        let ds = make_toy(&ToySpec::blobs(vec![0.5, 0.5], 2), 40, 37).unwrap();
        let folds = stratified_kfold(&ds.y, 5, 1).unwrap();
        let (train_idx, test_idx) = &folds[0];
        let gen = GeneratorSpec::Dimso(DimsoConfig {
            epochs: 10,
            samples_per_class: 15,
            ..DimsoConfig::default()
        });

        let a = fit_fold(&ds, train_idx, test_idx, &gen, PipelineKind::Pca, 0.9, 42).unwrap();

        // Corrupt every test row.
        let mut mutated = ds.clone();
        for &i in test_idx {
            for v in mutated.x.row_mut(i) {
                *v += 100.0;
            }
        }
        let b = fit_fold(&mutated, train_idx, test_idx, &gen, PipelineKind::Pca, 0.9, 42).unwrap();

        assert_eq!(a.standardizer, b.standardizer);
        assert_eq!(a.pca, b.pca);
        assert_eq!(a.x_syn, b.x_syn);
        assert_eq!(a.dimso_model, b.dimso_model);
        // The test representation does change.
        assert_ne!(a.x_test, b.x_test);
    }

    #[test]
    fn report_serializes_with_stable_keys() {
        let ds = make_toy(&ToySpec::blobs(vec![0.5, 0.5], 2), 40, 41).unwrap();
        let report = run_protocol(
            &ds,
            &GeneratorSpec::Identity,
            ClassifierSpec::Gnb,
            &ProtocolConfig::default(),
        )
        .unwrap();
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["pipeline"], "raw");
        assert!(json["folds"].as_array().unwrap().len() == 5);
        assert!(json["aggregates"]["delta_q"]["mean"].is_number());
        let csv = report.per_fold_csv();
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.starts_with("fold,bac_real"));
    }
}
