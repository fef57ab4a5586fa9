//! The `generate` command: load a CSV, standardize, optionally move to PCA
//! component space, fit the generator, and write the balanced synthetic
//! dataset back in the input's original units.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use dimso::data::{load_csv, write_csv, LabelColumn, Standardizer};
use dimso::generator::{fit, DimsoConfig, DimsoModel};
use dimso::losses::LossKind;
use dimso::pca::{pca_fit, pca_inverse, pca_transform, PcaModel};

use crate::manifest::{sha256_hex, verify_digest, CommandManifest, GenerateParams, Manifest};
use crate::{CliError, GenerateArgs};

/// Serialized `--model-out` payload: everything needed to regenerate and
/// de-standardize synthetic data in a later invocation.
#[derive(Serialize, Deserialize)]
pub struct PipelineBundle {
    pub bundle_version: u32,
    pub standardizer: Standardizer,
    pub pca: Option<PcaModel>,
    pub model: DimsoModel,
    pub feature_names: Option<Vec<String>>,
    pub label_names: Option<BTreeMap<i64, String>>,
    pub label_header: String,
}

pub const BUNDLE_VERSION: u32 = 1;

fn parse_pca_threshold(raw: &str) -> Result<Option<f64>, CliError> {
    if raw.eq_ignore_ascii_case("off") {
        return Ok(None);
    }
    let value: f64 = raw
        .parse()
        .map_err(|_| CliError::Usage(format!("--pca-threshold must be 'off' or a number, got '{raw}'")))?;
    if !(value > 0.0 && value <= 1.0) {
        return Err(CliError::Usage(format!(
            "--pca-threshold must lie in (0, 1], got {value}"
        )));
    }
    Ok(Some(value))
}

fn resolve_params(args: &GenerateArgs) -> Result<GenerateParams, CliError> {
    if let Some(manifest_path) = &args.from_manifest {
        let manifest = Manifest::load(manifest_path)?;
        let CommandManifest::Generate(mut params) = manifest.command else {
            return Err(CliError::Usage(format!(
                "{} does not describe a generate run",
                manifest_path.display()
            )));
        };
        verify_digest(&params.input, &params.input_sha256)?;
        if let Some(out) = &args.out {
            params.out = out.clone();
        }
        if let Some(model_out) = &args.model_out {
            params.model_out = Some(model_out.clone());
        }
        return Ok(params);
    }

    let input = args
        .input
        .clone()
        .ok_or_else(|| CliError::Usage("--input is required (or --from-manifest)".into()))?;
    let input_sha256 = sha256_hex(&input)?;
    Ok(GenerateParams {
        input,
        input_sha256,
        label_col: args.label_col.clone().unwrap_or_else(|| "label".into()),
        header: !args.no_header,
        loss: args.loss.as_str().to_string(),
        features_factor: args.features_factor,
        epochs: args.epochs,
        lr: args.lr,
        samples_per_class: args.samples_per_class,
        pca_threshold: parse_pca_threshold(&args.pca_threshold)?,
        seed: args.seed,
        out: args.out.clone().unwrap_or_else(|| PathBuf::from("synthetic.csv")),
        model_out: args.model_out.clone(),
    })
}

fn manifest_path_for(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

pub fn run(args: GenerateArgs) -> Result<(), CliError> {
    let params = resolve_params(&args)?;
    let label_col = LabelColumn::from_str(&params.label_col).expect("infallible");
    let dataset = load_csv(&params.input, &label_col, params.header)?;

    let loss = LossKind::from_str(&params.loss)?;
    let cfg = DimsoConfig {
        features_factor: params.features_factor,
        epochs: params.epochs,
        learning_rate: params.lr,
        samples_per_class: params.samples_per_class,
        loss,
        seed: params.seed,
    };

    let standardizer = Standardizer::fit(&dataset.x)?;
    let standardized = standardizer.transform(&dataset.x)?;
    let (pca, train_repr) = match params.pca_threshold {
        Some(threshold) => {
            let model = pca_fit(&standardized, threshold)?;
            let repr = pca_transform(&model, &standardized)?;
            (Some(model), repr)
        }
        None => (None, standardized),
    };

    let model = fit(&train_repr, &dataset.y, &cfg)?;
    let (synthetic_repr, y_syn) = model.generate()?;
    let synthetic_standardized = match &pca {
        Some(p) => pca_inverse(p, &synthetic_repr)?,
        None => synthetic_repr,
    };
    let synthetic = standardizer.inverse_transform(&synthetic_standardized)?;

    if let Some(parent) = params.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let label_header = dataset
        .label_column_name
        .clone()
        .unwrap_or_else(|| "label".into());
    let mut out_file = std::io::BufWriter::new(std::fs::File::create(&params.out)?);
    write_csv(
        &mut out_file,
        &synthetic,
        &y_syn,
        dataset.feature_names.as_deref(),
        &label_header,
        |l| dataset.label_display(l),
    )?;
    drop(out_file);

    if let Some(model_out) = &params.model_out {
        if let Some(parent) = model_out.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        let bundle = PipelineBundle {
            bundle_version: BUNDLE_VERSION,
            standardizer,
            pca,
            model,
            feature_names: dataset.feature_names.clone(),
            label_names: dataset.label_names.clone(),
            label_header,
        };
        let json = serde_json::to_string(&bundle)
            .map_err(|e| CliError::Internal(format!("model serialization failed: {e}")))?;
        std::fs::write(model_out, json.as_bytes())?;
    }

    let manifest = Manifest::new(CommandManifest::Generate(params.clone()));
    manifest.save(&manifest_path_for(&params.out))?;

    println!(
        "wrote {} synthetic rows ({} per class, {} classes) to {}",
        synthetic.rows(),
        cfg.samples_per_class,
        synthetic.rows() / cfg.samples_per_class,
        params.out.display()
    );
    Ok(())
}
