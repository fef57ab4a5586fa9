//! The `evaluate` command: run the stratified cross-validation protocol and
//! write the report JSON, a flat per-fold CSV, and the generator's per-epoch
//! loss log.

use std::path::PathBuf;
use std::str::FromStr;

use dimso::data::{load_csv, LabelColumn};
use dimso::eval::{run_protocol, ClassifierSpec, GeneratorSpec, PipelineKind, ProtocolConfig};
use dimso::generator::DimsoConfig;
use dimso::losses::LossKind;
use dimso::smote::SmoteConfig;

use crate::manifest::{sha256_hex, verify_digest, CommandManifest, EvaluateParams, Manifest};
use crate::{CliError, EvaluateArgs};

fn resolve_params(args: &EvaluateArgs) -> Result<EvaluateParams, CliError> {
    if let Some(manifest_path) = &args.from_manifest {
        let manifest = Manifest::load(manifest_path)?;
        let CommandManifest::Evaluate(mut params) = manifest.command else {
            return Err(CliError::Usage(format!(
                "{} does not describe an evaluate run",
                manifest_path.display()
            )));
        };
        verify_digest(&params.input, &params.input_sha256)?;
        if let Some(out_dir) = &args.out_dir {
            params.out_dir = out_dir.clone();
        }
        return Ok(params);
    }

    let input = args
        .input
        .clone()
        .ok_or_else(|| CliError::Usage("--input is required (or --from-manifest)".into()))?;
    let generator = args
        .generator
        .ok_or_else(|| CliError::Usage("--generator is required (or --from-manifest)".into()))?;
    let classifier = args
        .classifier
        .ok_or_else(|| CliError::Usage("--classifier is required (or --from-manifest)".into()))?;
    let input_sha256 = sha256_hex(&input)?;
    Ok(EvaluateParams {
        input,
        input_sha256,
        label_col: args.label_col.clone().unwrap_or_else(|| "label".into()),
        header: !args.no_header,
        generator: generator.as_str().to_string(),
        classifier: classifier.as_str().to_string(),
        pipeline: args.pipeline.as_str().to_string(),
        folds: args.folds,
        pca_threshold: args.pca_threshold,
        epochs: args.epochs.unwrap_or(2000),
        samples_per_class: args.samples_per_class.unwrap_or(300),
        smote_neighbors: args.smote_neighbors.unwrap_or(5),
        seed: args.seed,
        out_dir: args.out_dir.clone().unwrap_or_else(|| PathBuf::from("eval_out")),
    })
}

fn generator_spec(params: &EvaluateParams) -> Result<GeneratorSpec, CliError> {
    let dimso_with = |loss: LossKind| {
        GeneratorSpec::Dimso(DimsoConfig {
            epochs: params.epochs,
            samples_per_class: params.samples_per_class,
            loss,
            ..DimsoConfig::default()
        })
    };
    Ok(match params.generator.as_str() {
        "dimso-rae" => dimso_with(LossKind::Rae),
        "dimso-w" => dimso_with(LossKind::W),
        "dimso-wc" => dimso_with(LossKind::Wc),
        "smote" => GeneratorSpec::Smote(SmoteConfig {
            k_neighbors: params.smote_neighbors,
            samples_per_class: params.samples_per_class,
            seed: 0,
        }),
        "identity" => GeneratorSpec::Identity,
        other => {
            return Err(CliError::Usage(format!(
                "unknown generator '{other}'"
            )))
        }
    })
}

pub fn run(args: EvaluateArgs) -> Result<(), CliError> {
    let params = resolve_params(&args)?;
    let label_col = LabelColumn::from_str(&params.label_col).expect("infallible");
    let dataset = load_csv(&params.input, &label_col, params.header)?;

    let generator = generator_spec(&params)?;
    let classifier = match params.classifier.as_str() {
        "gnb" => ClassifierSpec::Gnb,
        "mlp" => ClassifierSpec::Mlp,
        other => return Err(CliError::Usage(format!("unknown classifier '{other}'"))),
    };
    let pipeline = match params.pipeline.as_str() {
        "raw" => PipelineKind::Raw,
        "pca" => PipelineKind::Pca,
        other => return Err(CliError::Usage(format!("unknown pipeline '{other}'"))),
    };

    let proto = ProtocolConfig {
        folds: params.folds,
        pipeline,
        pca_threshold: params.pca_threshold,
        seed: params.seed,
    };
    let report = run_protocol(&dataset, &generator, classifier, &proto)?;

    std::fs::create_dir_all(&params.out_dir)?;
    let report_json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Internal(format!("report serialization failed: {e}")))?;
    std::fs::write(params.out_dir.join("report.json"), report_json.as_bytes())?;
    std::fs::write(
        params.out_dir.join("folds.csv"),
        report.per_fold_csv().as_bytes(),
    )?;
    if !report.training_logs.is_empty() {
        let mut log = String::from("fold,class,epoch,loss\n");
        for fold_log in &report.training_logs {
            for (label, losses) in fold_log.class_labels.iter().zip(&fold_log.losses) {
                for (epoch, loss) in losses.iter().enumerate() {
                    log.push_str(&format!("{},{},{},{}\n", fold_log.fold, label, epoch, loss));
                }
            }
        }
        std::fs::write(params.out_dir.join("loss_log.csv"), log.as_bytes())?;
    }
    let manifest = Manifest::new(CommandManifest::Evaluate(params.clone()));
    manifest.save(&params.out_dir.join("manifest.json"))?;

    println!(
        "evaluated {} folds: mean delta_q {:+.4} (bac real {:.4}, bac synthetic {:.4}); \
         reports in {}",
        report.folds.len(),
        report.aggregates.delta_q.mean,
        report.aggregates.bac_real.mean,
        report.aggregates.bac_syn.mean,
        params.out_dir.display()
    );
    Ok(())
}
