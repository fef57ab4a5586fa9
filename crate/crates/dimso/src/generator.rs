//! The distribution-mapping generator: Gaussian noise of inflated
//! dimensionality is sampled once and mapped through one fully connected
//! network per class onto that class's samples, trained with a randomized
//! loss over a fresh pairing plan every epoch.
//!
//! Pairing semantics: each class draws a persistent random assignment at
//! training start, giving every synthetic row one fixed target partner
//! (targets are covered as evenly as possible when row counts differ). The
//! per-epoch randomness decides which rows participate, not who pairs with
//! whom. Re-randomizing the correspondence itself every step makes the
//! row-matching losses drive all synthetic rows toward the per-class
//! componentwise median (the attraction field averages out), collapsing the
//! synthetic distribution; the persistent assignment is what lets the mapped
//! noise spread over the target samples.
//!
//! Randomness is split into independent per-class streams derived from the
//! config seed, so classes train identically whether run in any order or in
//! parallel; class order in the output follows sorted labels.

use std::path::Path;
use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{loss_and_grad, LossKind, PairingPlan};
use crate::matrix::Matrix;
use crate::metrics::mmd;
use crate::nn::{init_network, AdamConfig, DenseLayer, MlpNetwork};
use crate::rng::{derive_rng, derive_seed, stream};

/// Generator hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimsoConfig {
    /// Multiplier on the data dimensionality fixing the noise width
    /// `d = floor(features_factor * dim(X))`.
    pub features_factor: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Noise rows, and therefore synthetic rows emitted per class.
    pub samples_per_class: usize,
    pub loss: LossKind,
    pub seed: u64,
}

impl Default for DimsoConfig {
    fn default() -> Self {
        DimsoConfig {
            features_factor: 3.5,
            epochs: 2000,
            learning_rate: 1e-3,
            samples_per_class: 300,
            loss: LossKind::Rae,
            seed: 0,
        }
    }
}

impl DimsoConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.features_factor.is_finite() || self.features_factor <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "features factor must be positive, got {}",
                self.features_factor
            )));
        }
        if self.epochs < 1 {
            return Err(Error::InvalidInput("epochs must be at least 1".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.samples_per_class < 2 {
            return Err(Error::InvalidInput(format!(
                "samples per class must be at least 2, got {}",
                self.samples_per_class
            )));
        }
        Ok(())
    }

    /// Noise dimensionality for data of width `dim`; must exceed `dim`.
    pub fn noise_dim(&self, dim: usize) -> Result<usize> {
        let d = (self.features_factor * dim as f64).floor() as usize;
        if d <= dim {
            return Err(Error::InvalidInput(format!(
                "noise dimensionality {d} does not exceed the data dimensionality {dim} \
                 (features factor {})",
                self.features_factor
            )));
        }
        Ok(d)
    }
}

/// A fitted generator: the shared noise matrix, one trained network per
/// class, and the per-epoch loss log of each class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "ModelFile", try_from = "ModelFile")]
pub struct DimsoModel {
    config: DimsoConfig,
    class_labels: Vec<i64>,
    noise: Matrix,
    networks: Vec<MlpNetwork>,
    training_log: Vec<Vec<f64>>,
}

impl DimsoModel {
    pub fn config(&self) -> &DimsoConfig {
        &self.config
    }

    /// Sorted distinct labels, aligned with [`DimsoModel::networks`].
    pub fn class_labels(&self) -> &[i64] {
        &self.class_labels
    }

    pub fn networks(&self) -> &[MlpNetwork] {
        &self.networks
    }

    /// Shared noise consumed by every class network.
    pub fn noise(&self) -> &Matrix {
        &self.noise
    }

    /// Per-class, per-epoch loss values (empty for loaded models).
    pub fn training_log(&self) -> &[Vec<f64>] {
        &self.training_log
    }

    pub fn output_dim(&self) -> usize {
        self.networks[0].output_dim()
    }

    /// Maps the stored noise through every class network. The output is
    /// balanced (`samples_per_class` rows per class, sorted label order) and
    /// deterministic given the model.
    pub fn generate(&self) -> Result<(Matrix, Vec<i64>)> {
        let mut parts = Vec::with_capacity(self.networks.len());
        for net in &self.networks {
            let (out, _) = net.forward(&self.noise)?;
            parts.push(out);
        }
        let refs: Vec<&Matrix> = parts.iter().collect();
        let x_syn = Matrix::vstack(&refs)?;
        let mut y_syn = Vec::with_capacity(x_syn.rows());
        for &label in &self.class_labels {
            y_syn.extend(std::iter::repeat_n(label, self.config.samples_per_class));
        }
        Ok((x_syn, y_syn))
    }

    /// Writes the model as versioned JSON.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)
            .map_err(|e| Error::Serialization(e.to_string()))
    }

    /// Loads a model saved by [`DimsoModel::save`]. Optimizer state and the
    /// training log are not persisted: a loaded model generates identically
    /// but does not resume training.
    pub fn load(path: &Path) -> Result<DimsoModel> {
        let file = std::fs::File::open(path)?;
        serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// On-disk model layout (format version 1): config, sorted class labels, the
/// shared noise matrix, and per-class layer weights.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    config: DimsoConfig,
    class_labels: Vec<i64>,
    noise: Matrix,
    networks: Vec<Vec<LayerFile>>,
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    weights: Matrix,
    bias: Vec<f64>,
}

const MODEL_FORMAT_VERSION: u32 = 1;

impl From<DimsoModel> for ModelFile {
    fn from(model: DimsoModel) -> ModelFile {
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            config: model.config,
            class_labels: model.class_labels,
            noise: model.noise,
            networks: model
                .networks
                .iter()
                .map(|net| {
                    net.layers()
                        .iter()
                        .map(|l| LayerFile {
                            weights: l.weights().clone(),
                            bias: l.bias().to_vec(),
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

impl TryFrom<ModelFile> for DimsoModel {
    type Error = String;

    fn try_from(file: ModelFile) -> std::result::Result<DimsoModel, String> {
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(format!(
                "unsupported model format version {} (expected {MODEL_FORMAT_VERSION})",
                file.format_version
            ));
        }
        if file.class_labels.len() != file.networks.len() {
            return Err(format!(
                "model has {} class labels but {} networks",
                file.class_labels.len(),
                file.networks.len()
            ));
        }
        if file.networks.is_empty() {
            return Err("model holds no networks".into());
        }
        let networks: Vec<MlpNetwork> = file
            .networks
            .into_iter()
            .map(|layers| {
                MlpNetwork::from_layers(
                    layers
                        .into_iter()
                        .map(|l| DenseLayer {
                            weights: l.weights,
                            bias: l.bias,
                        })
                        .collect(),
                )
                .map_err(|e| e.to_string())
            })
            .collect::<std::result::Result<_, String>>()?;
        for net in &networks {
            if net.input_dim() != file.noise.cols() {
                return Err(format!(
                    "network expects {} inputs but the noise has {} columns",
                    net.input_dim(),
                    file.noise.cols()
                ));
            }
        }
        if file.noise.rows() != file.config.samples_per_class {
            return Err(format!(
                "noise has {} rows but the config requests {} samples per class",
                file.noise.rows(),
                file.config.samples_per_class
            ));
        }
        let n_classes = file.class_labels.len();
        Ok(DimsoModel {
            config: file.config,
            class_labels: file.class_labels,
            noise: file.noise,
            networks,
            training_log: vec![Vec::new(); n_classes],
        })
    }
}

/// Persistent synthetic-to-target assignment for one class: with fewer
/// synthetic rows than targets, a random sample of distinct targets; with
/// more, shuffled whole-class blocks tiled to cover every target as evenly
/// as possible.
fn draw_assignment<R: rand::Rng>(
    n_synthetic: usize,
    n_target: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut assignment = Vec::with_capacity(n_synthetic);
    while assignment.len() < n_synthetic {
        let mut block: Vec<usize> = (0..n_target).collect();
        for i in 0..n_target {
            let j = rng.gen_range(i..n_target);
            block.swap(i, j);
        }
        assignment.extend_from_slice(&block);
    }
    assignment.truncate(n_synthetic);
    assignment
}

/// Trains one class's network against its target rows; owns the class's
/// private RNG stream for pairing plans and the persistent assignment.
struct ClassTrainer {
    network: MlpNetwork,
    target: Matrix,
    assignment: Vec<usize>,
    plan_rng: rand_chacha::ChaCha8Rng,
    adam: AdamConfig,
    loss: LossKind,
    log: Vec<f64>,
}

impl ClassTrainer {
    fn new(
        cfg: &DimsoConfig,
        noise_dim: usize,
        dim: usize,
        class_pos: usize,
        target: Matrix,
    ) -> Result<ClassTrainer> {
        let mut plan_rng = derive_rng(cfg.seed, &[stream::PAIRING, class_pos as u64]);
        let assignment = draw_assignment(cfg.samples_per_class, target.rows(), &mut plan_rng);
        Ok(ClassTrainer {
            network: init_network(
                noise_dim,
                dim,
                derive_seed(cfg.seed, &[stream::NET_INIT, class_pos as u64]),
            )?,
            target,
            assignment,
            plan_rng,
            adam: AdamConfig::with_learning_rate(cfg.learning_rate),
            loss: cfg.loss,
            log: Vec::new(),
        })
    }

    /// One full-batch epoch: fresh pairing plan, forward, loss, Adam step.
    fn train_epoch(&mut self, noise: &Matrix) -> Result<f64> {
        let plan =
            PairingPlan::draw_coupled(&self.assignment, self.target.rows(), &mut self.plan_rng)?;
        let (output, tape) = self.network.forward(noise)?;
        let (value, grad) = loss_and_grad(self.loss, &output, &self.target, &plan)?;
        self.network.backward_and_step(&tape, &grad, &self.adam)?;
        self.log.push(value);
        Ok(value)
    }
}

fn validate_fit_inputs(x: &Matrix, y: &[i64], cfg: &DimsoConfig) -> Result<(Vec<i64>, usize)> {
    cfg.validate()?;
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::InvalidInput("training data is empty".into()));
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
            "training data contains non-finite values".into(),
        ));
    }
    let mut classes: Vec<i64> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    for &class in &classes {
        let count = y.iter().filter(|&&l| l == class).count();
        if count < 2 {
            return Err(Error::InvalidInput(format!(
                "class {class} has {count} sample(s); the generator needs at least 2"
            )));
        }
    }
    let noise_dim = cfg.noise_dim(x.cols())?;
    Ok((classes, noise_dim))
}

fn sample_noise(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = derive_rng(seed, &[stream::NOISE]);
    let mut noise = Matrix::zeros(rows, cols);
    for v in noise.data_mut() {
        *v = StandardNormal.sample(&mut rng);
    }
    noise
}

fn class_rows(x: &Matrix, y: &[i64], class: i64) -> Matrix {
    let idx: Vec<usize> = y
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == class)
        .map(|(i, _)| i)
        .collect();
    x.select_rows(&idx)
}

/// Fits one network per class for `cfg.epochs` epochs. Every epoch draws a
/// fresh pairing plan, evaluates the configured loss on the mapped noise
/// against the class's rows, and applies one Adam step; every loss value is
/// logged.
pub fn fit(x: &Matrix, y: &[i64], cfg: &DimsoConfig) -> Result<DimsoModel> {
    let (classes, noise_dim) = validate_fit_inputs(x, y, cfg)?;
    let noise = sample_noise(cfg.samples_per_class, noise_dim, cfg.seed);

    let mut networks = Vec::with_capacity(classes.len());
    let mut training_log = Vec::with_capacity(classes.len());
    for (class_pos, &class) in classes.iter().enumerate() {
        let mut trainer =
            ClassTrainer::new(cfg, noise_dim, x.cols(), class_pos, class_rows(x, y, class))?;
        for _ in 0..cfg.epochs {
            trainer.train_epoch(&noise)?;
        }
        networks.push(trainer.network);
        training_log.push(trainer.log);
    }

    Ok(DimsoModel {
        config: *cfg,
        class_labels: classes,
        noise,
        networks,
        training_log,
    })
}

/// Outcome of [`fit_until_similarity`].
#[derive(Clone, Debug, PartialEq)]
pub struct EarlyStopOutcome {
    pub model: DimsoModel,
    /// Epochs actually trained (per class; classes advance in lockstep).
    pub epochs_used: usize,
    /// Wall-clock time covering training plus checkpoint evaluations.
    pub elapsed_seconds: f64,
    /// Pooled MMD at the last checkpoint evaluated, if any was reached.
    pub final_mmd: Option<f64>,
}

/// Trains like [`fit`] but checks the pooled similarity every `check_every`
/// epochs: all generated rows against all of `x`, labels ignored. Stops at
/// the first checkpoint with `MMD <= target_mmd`, otherwise at `max_epochs`.
pub fn fit_until_similarity(
    x: &Matrix,
    y: &[i64],
    cfg: &DimsoConfig,
    target_mmd: f64,
    check_every: usize,
    max_epochs: usize,
) -> Result<EarlyStopOutcome> {
    if target_mmd.is_nan() || target_mmd < 0.0 {
        return Err(Error::InvalidInput(format!(
            "target MMD must be nonnegative, got {target_mmd}"
        )));
    }
    if check_every < 1 || max_epochs < 1 {
        return Err(Error::InvalidInput(
            "check_every and max_epochs must be at least 1".into(),
        ));
    }
    let (classes, noise_dim) = validate_fit_inputs(x, y, cfg)?;
    let started = Instant::now();
    let noise = sample_noise(cfg.samples_per_class, noise_dim, cfg.seed);

    let mut trainers: Vec<ClassTrainer> = classes
        .iter()
        .enumerate()
        .map(|(class_pos, &class)| {
            ClassTrainer::new(cfg, noise_dim, x.cols(), class_pos, class_rows(x, y, class))
        })
        .collect::<Result<_>>()?;

    let mut epochs_used = 0;
    let mut final_mmd = None;
    'training: while epochs_used < max_epochs {
        for trainer in &mut trainers {
            trainer.train_epoch(&noise)?;
        }
        epochs_used += 1;
        if epochs_used % check_every == 0 {
            let mut parts = Vec::with_capacity(trainers.len());
            for trainer in &trainers {
                let (out, _) = trainer.network.forward(&noise)?;
                parts.push(out);
            }
            let refs: Vec<&Matrix> = parts.iter().collect();
            let synthetic = Matrix::vstack(&refs)?;
            let distance = mmd(&synthetic, x)?;
            final_mmd = Some(distance);
            if distance <= target_mmd {
                break 'training;
            }
        }
    }

    let mut networks = Vec::with_capacity(trainers.len());
    let mut training_log = Vec::with_capacity(trainers.len());
    for trainer in trainers {
        networks.push(trainer.network);
        training_log.push(trainer.log);
    }
    Ok(EarlyStopOutcome {
        model: DimsoModel {
            config: *cfg,
            class_labels: classes,
            noise,
            networks,
            training_log,
        },
        epochs_used,
        elapsed_seconds: started.elapsed().as_secs_f64(),
        final_mmd,
    })
}
