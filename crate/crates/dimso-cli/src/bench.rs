//! The `bench` command: repeatedly train toward a target MMD and record how
//! many epochs and seconds each repeat needed. Samples are treated as one
//! unlabeled class; with `--toy`, every repeat draws a fresh dataset.

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use dimso::data::{load_csv, make_toy, LabelColumn, Standardizer, ToySpec};
use dimso::generator::{fit_until_similarity, DimsoConfig};
use dimso::losses::LossKind;
use dimso::matrix::Matrix;

use crate::manifest::{sha256_hex, verify_digest, BenchParams, BenchSource, CommandManifest, Manifest};
use crate::{mix_seed, BenchArgs, CliError, ToyArg};

#[derive(Serialize, Deserialize)]
struct BenchReport {
    target_mmd: f64,
    loss: String,
    check_every: usize,
    max_epochs: usize,
    repeats: Vec<RepeatResult>,
    aggregates: BenchAggregates,
}

#[derive(Serialize, Deserialize)]
struct RepeatResult {
    repeat: usize,
    epochs_used: usize,
    elapsed_seconds: f64,
    final_mmd: f64,
    reached_target: bool,
}

#[derive(Serialize, Deserialize)]
struct BenchAggregates {
    epochs_mean: f64,
    epochs_std: f64,
    seconds_mean: f64,
    seconds_std: f64,
    mmd_mean: f64,
    mmd_std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn resolve_params(args: &BenchArgs) -> Result<BenchParams, CliError> {
    if let Some(manifest_path) = &args.from_manifest {
        let manifest = Manifest::load(manifest_path)?;
        let CommandManifest::Bench(mut params) = manifest.command else {
            return Err(CliError::Usage(format!(
                "{} does not describe a bench run",
                manifest_path.display()
            )));
        };
        if let BenchSource::Csv {
            input, input_sha256, ..
        } = &params.source
        {
            verify_digest(input, input_sha256)?;
        }
        if let Some(out_dir) = &args.out_dir {
            params.out_dir = out_dir.clone();
        }
        return Ok(params);
    }

    let source = match (&args.input, args.toy) {
        (Some(input), None) => BenchSource::Csv {
            input: input.clone(),
            input_sha256: sha256_hex(input)?,
            label_col: args.label_col.clone().unwrap_or_else(|| "label".into()),
            header: !args.no_header,
        },
        (None, Some(ToyArg::ClusteredCube)) => BenchSource::Toy {
            toy: "clustered-cube".into(),
            clusters: args.clusters,
            features: args.features,
            n: args.n,
        },
        (None, None) => {
            return Err(CliError::Usage(
                "either --input or --toy is required (or --from-manifest)".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap forbids --input with --toy"),
    };
    let target_mmd = args
        .target_mmd
        .ok_or_else(|| CliError::Usage("--target-mmd is required (or --from-manifest)".into()))?;
    Ok(BenchParams {
        source,
        target_mmd,
        loss: args.loss.as_str().to_string(),
        check_every: args.check_every,
        max_epochs: args.max_epochs,
        repeats: args.repeats,
        samples_per_class: args.samples_per_class,
        seed: args.seed,
        out_dir: args.out_dir.clone().unwrap_or_else(|| PathBuf::from("bench_out")),
    })
}

/// Stream tags for per-repeat seeds.
const BENCH_DATA_STREAM: u64 = 0x_b1;
const BENCH_FIT_STREAM: u64 = 0x_b2;

fn repeat_data(params: &BenchParams, repeat: usize) -> Result<Matrix, CliError> {
    match &params.source {
        BenchSource::Csv {
            input,
            label_col,
            header,
            ..
        } => {
            let col = LabelColumn::from_str(label_col).expect("infallible");
            let dataset = load_csv(input, &col, *header)?;
            Ok(dataset.x)
        }
        BenchSource::Toy {
            clusters,
            features,
            n,
            ..
        } => {
            let spec = ToySpec::clustered_cube(*clusters, *features);
            let seed = mix_seed(params.seed, mix_seed(BENCH_DATA_STREAM, repeat as u64));
            Ok(make_toy(&spec, *n, seed)?.x)
        }
    }
}

pub fn run(args: BenchArgs) -> Result<(), CliError> {
    let params = resolve_params(&args)?;
    if params.repeats == 0 {
        return Err(CliError::Usage("--repeats must be at least 1".into()));
    }
    let loss = LossKind::from_str(&params.loss)?;

    let mut repeats = Vec::with_capacity(params.repeats);
    for repeat in 0..params.repeats {
        let x = repeat_data(&params, repeat)?;
        let standardizer = Standardizer::fit(&x)?;
        let x = standardizer.transform(&x)?;
        // The benchmark treats all samples as one class.
        let y = vec![0i64; x.rows()];
        let cfg = DimsoConfig {
            epochs: params.max_epochs,
            samples_per_class: params.samples_per_class.unwrap_or(x.rows()),
            loss,
            seed: mix_seed(params.seed, mix_seed(BENCH_FIT_STREAM, repeat as u64)),
            ..DimsoConfig::default()
        };
        let outcome =
            fit_until_similarity(&x, &y, &cfg, params.target_mmd, params.check_every, params.max_epochs)?;
        let final_mmd = match outcome.final_mmd {
            Some(v) => v,
            None => {
                let (synthetic, _) = outcome.model.generate()?;
                dimso::metrics::mmd(&synthetic, &x)?
            }
        };
        println!(
            "repeat {repeat}: {} epochs, {:.3}s, final MMD {:.6}{}",
            outcome.epochs_used,
            outcome.elapsed_seconds,
            final_mmd,
            if final_mmd <= params.target_mmd {
                ""
            } else {
                " (target not reached)"
            }
        );
        repeats.push(RepeatResult {
            repeat,
            epochs_used: outcome.epochs_used,
            elapsed_seconds: outcome.elapsed_seconds,
            final_mmd,
            reached_target: final_mmd <= params.target_mmd,
        });
    }

    let (epochs_mean, epochs_std) =
        mean_std(&repeats.iter().map(|r| r.epochs_used as f64).collect::<Vec<_>>());
    let (seconds_mean, seconds_std) =
        mean_std(&repeats.iter().map(|r| r.elapsed_seconds).collect::<Vec<_>>());
    let (mmd_mean, mmd_std) = mean_std(&repeats.iter().map(|r| r.final_mmd).collect::<Vec<_>>());
    let report = BenchReport {
        target_mmd: params.target_mmd,
        loss: params.loss.clone(),
        check_every: params.check_every,
        max_epochs: params.max_epochs,
        repeats,
        aggregates: BenchAggregates {
            epochs_mean,
            epochs_std,
            seconds_mean,
            seconds_std,
            mmd_mean,
            mmd_std,
        },
    };

    std::fs::create_dir_all(&params.out_dir)?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Internal(format!("report serialization failed: {e}")))?;
    std::fs::write(params.out_dir.join("bench_report.json"), json.as_bytes())?;
    let manifest = Manifest::new(CommandManifest::Bench(params.clone()));
    manifest.save(&params.out_dir.join("manifest.json"))?;

    println!(
        "{} repeats: mean {:.1} epochs ({:.1} std), mean {:.3}s ({:.3} std), mean MMD {:.6}; \
         report in {}",
        report.repeats.len(),
        epochs_mean,
        epochs_std,
        seconds_mean,
        seconds_std,
        mmd_mean,
        params.out_dir.display()
    );
    Ok(())
}
