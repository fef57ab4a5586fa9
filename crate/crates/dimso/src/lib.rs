//! Synthetic tabular data generation by distribution mapping with shuffled
//! optimization (DiMSO), plus the machinery to evaluate it: a fully connected
//! network maps shared high-dimensional Gaussian noise onto each class of a
//! target dataset under a randomized loss, producing a balanced synthetic
//! dataset.
//!
//! The crate also ships the surrounding toolkit: distribution-similarity
//! metrics (Wasserstein, MMD, MeanNN), a PCA pipeline for generating in
//! reduced dimensionality, a SMOTE baseline, dataset/CSV handling with
//! stratified splitting, and a cross-validated classification-benefit
//! harness.
//!
//! Everything is seed-deterministic: the same inputs and seeds reproduce
//! models, synthetic data, and reports bit-for-bit.

pub mod data;
pub mod error;
pub mod eval;
pub mod generator;
pub mod losses;
pub mod matrix;
pub mod metrics;
pub mod nn;
pub mod pca;
pub(crate) mod rng;
pub mod smote;

pub use data::{
    load_csv, make_toy, stratified_kfold, write_csv, Dataset, LabelColumn, Standardizer, ToySpec,
};
pub use error::{Error, Result};
pub use eval::{
    balanced_accuracy, run_protocol, ClassifierSpec, EvalReport, GeneratorSpec, PipelineKind,
    ProtocolConfig,
};
pub use generator::{fit, fit_until_similarity, DimsoConfig, DimsoModel, EarlyStopOutcome};
pub use losses::{
    covariance_gap, loss_and_grad, rae_loss, wasserstein_loss, wc_loss, LossKind, PairingPlan,
};
pub use matrix::Matrix;
pub use metrics::{mean_nn, mmd, per_class_similarity, wasserstein_distance, SimilarityReport};
pub use nn::{init_network, AdamConfig, DenseLayer, MlpNetwork};
pub use pca::{pca_fit, pca_inverse, pca_transform, PcaModel};
pub use smote::{smote_generate, SmoteConfig, SmoteOutput};
