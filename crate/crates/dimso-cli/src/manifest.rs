//! Run manifests: every command writes the fully resolved configuration
//! (all defaults materialized), the seed, and a digest of the input file
//! alongside its outputs, and can be re-run from that manifest to reproduce
//! the outputs bit-identically on the same machine.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub toolkit_version: String,
    #[serde(flatten)]
    pub command: CommandManifest,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum CommandManifest {
    Generate(GenerateParams),
    Evaluate(EvaluateParams),
    Bench(BenchParams),
}

/// Resolved parameters of a `generate` run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenerateParams {
    pub input: PathBuf,
    pub input_sha256: String,
    pub label_col: String,
    pub header: bool,
    pub loss: String,
    pub features_factor: f64,
    pub epochs: usize,
    pub lr: f64,
    pub samples_per_class: usize,
    /// `None` disables the PCA stage.
    pub pca_threshold: Option<f64>,
    pub seed: u64,
    pub out: PathBuf,
    pub model_out: Option<PathBuf>,
}

/// Resolved parameters of an `evaluate` run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvaluateParams {
    pub input: PathBuf,
    pub input_sha256: String,
    pub label_col: String,
    pub header: bool,
    pub generator: String,
    pub classifier: String,
    pub pipeline: String,
    pub folds: usize,
    pub pca_threshold: f64,
    pub epochs: usize,
    pub samples_per_class: usize,
    pub smote_neighbors: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
}

/// Resolved parameters of a `bench` run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchParams {
    pub source: BenchSource,
    pub target_mmd: f64,
    pub loss: String,
    pub check_every: usize,
    pub max_epochs: usize,
    pub repeats: usize,
    /// `None` requests as many synthetic rows as the dataset has samples.
    pub samples_per_class: Option<usize>,
    pub seed: u64,
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BenchSource {
    Csv {
        input: PathBuf,
        input_sha256: String,
        label_col: String,
        header: bool,
    },
    Toy {
        toy: String,
        clusters: usize,
        features: usize,
        n: usize,
    },
}

pub fn sha256_hex(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| {
        CliError::Data(format!("cannot read input {}: {e}", path.display()))
    })?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Fails when the file at `path` no longer matches the digest recorded in a
/// manifest; reproduction would be silently wrong otherwise.
pub fn verify_digest(path: &Path, expected: &str) -> Result<(), CliError> {
    let actual = sha256_hex(path)?;
    if actual != expected {
        return Err(CliError::Data(format!(
            "input {} does not match the manifest digest (got {actual}, expected {expected})",
            path.display()
        )));
    }
    Ok(())
}

impl Manifest {
    pub fn new(command: CommandManifest) -> Manifest {
        Manifest {
            manifest_version: MANIFEST_VERSION,
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            command,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Internal(format!("manifest serialization failed: {e}")))?;
        std::fs::write(path, json.as_bytes())
            .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Manifest, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read manifest {}: {e}", path.display())))?;
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("malformed manifest {}: {e}", path.display())))?;
        if manifest.manifest_version != MANIFEST_VERSION {
            return Err(CliError::Data(format!(
                "unsupported manifest version {} (expected {MANIFEST_VERSION})",
                manifest.manifest_version
            )));
        }
        Ok(manifest)
    }
}
