use std::fs;
use std::path::PathBuf;

use clap::Args;
use labelspace::dataset::load_dataset;
use labelspace::embeddings::load_embeddings_with;
use labelspace::model::save_checkpoint;
use labelspace::training::train;

use super::{resolve_training, Context};
use crate::cfgfile::ConfigFile;
use crate::manifest::{sibling_manifest, Manifest};
use crate::{CliResult, TrainKnobs};

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    /// Optional key = value config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output checkpoint path.
    #[arg(long, default_value = "model.ckpt")]
    checkpoint: PathBuf,
    /// Output per-epoch report CSV path.
    #[arg(long, default_value = "train_report.csv")]
    report: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Transform dimension (rows of the output matrix).
    #[arg(long)]
    k: Option<usize>,
    /// L2-normalize word vectors on load (off by default; ranking is
    /// scale-sensitive).
    #[arg(long)]
    normalize_embeddings: bool,
    #[command(flatten)]
    knobs: TrainKnobs,
}

pub fn run(args: TrainArgs, _ctx: &Context) -> CliResult<()> {
    let config = args
        .config
        .as_deref()
        .map(ConfigFile::load)
        .transpose()?;
    let resolved = resolve_training(&args.knobs, config.as_ref(), args.epochs, args.seed, args.k)?;

    let table = load_embeddings_with(&args.embeddings, args.normalize_embeddings)?;
    let dataset = load_dataset(&args.dataset, &table)?;
    let model_config = resolved.model_config(dataset.feature_dim, table.dim());

    let (params, report) = train(
        &dataset,
        &table,
        &model_config,
        &resolved.loss_config(),
        &resolved.opt_config(),
        &resolved.train_config(),
    )?;

    save_checkpoint(&params, &args.checkpoint)?;
    fs::write(&args.report, report.to_csv())
        .map_err(|e| anyhow::anyhow!("writing {}: {e}", args.report.display()))?;

    let mut manifest = Manifest::new("train");
    manifest.push_input("dataset", &args.dataset)?;
    manifest.push_input("embeddings", &args.embeddings)?;
    if let Some(path) = &args.config {
        manifest.push_input("config", path)?;
    }
    resolved.record(&mut manifest);
    manifest.push("cfg.normalize_embeddings", args.normalize_embeddings);
    manifest.push_output("checkpoint", &args.checkpoint);
    manifest.push_output("report", &args.report);
    manifest.write(&sibling_manifest(&args.checkpoint))?;

    for epoch in &report.epochs {
        println!(
            "epoch {:>3}: mean_loss={:.6} violation_rate={:.4} ({:.2}s)",
            epoch.epoch, epoch.mean_loss, epoch.violation_rate, epoch.seconds
        );
    }
    if report.skipped_instances > 0 {
        eprintln!(
            "warning: skipped {} instance visits whose positives cover the vocabulary",
            report.skipped_instances
        );
    }
    println!(
        "trained {} epochs; checkpoint {} ({} parameters)",
        report.epochs.len(),
        args.checkpoint.display(),
        params.num_scalars()
    );
    Ok(())
}
