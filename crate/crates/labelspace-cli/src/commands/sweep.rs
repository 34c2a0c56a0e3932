use std::fs;
use std::path::PathBuf;

use clap::Args;
use labelspace::analysis::{sweep_k, sweep_to_csv, SweepConfig};
use labelspace::dataset::load_dataset;
use labelspace::embeddings::load_embeddings_with;

use super::{resolve_training, Context};
use crate::cfgfile::{parse_k_list, ConfigFile};
use crate::manifest::{sibling_manifest, Manifest};
use crate::{usage, CliResult, TrainKnobs};

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    /// Transform dimensions to train, comma-separated.
    #[arg(long, default_value = "2,4,8,16")]
    k_list: String,
    /// Fraction of the dataset used for training; the rest is the shared
    /// test split.
    #[arg(long, default_value_t = 0.7)]
    train_fraction: f64,
    /// Predicted labels per image for evaluation.
    #[arg(long, default_value_t = 3)]
    topk: usize,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Optional key = value config file for the shared training knobs.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "sweep.csv")]
    output: PathBuf,
    #[arg(long)]
    normalize_embeddings: bool,
    #[command(flatten)]
    knobs: TrainKnobs,
}

pub fn run(args: SweepArgs, _ctx: &Context) -> CliResult<()> {
    let k_values = parse_k_list(&args.k_list)?;
    if !(args.train_fraction > 0.0 && args.train_fraction < 1.0) {
        return Err(usage("--train-fraction must be in (0, 1)"));
    }
    let config = args
        .config
        .as_deref()
        .map(ConfigFile::load)
        .transpose()?;
    let resolved = resolve_training(&args.knobs, config.as_ref(), args.epochs, args.seed, None)?;

    let table = load_embeddings_with(&args.embeddings, args.normalize_embeddings)?;
    if args.topk == 0 || args.topk > table.len() {
        return Err(usage(format!("--topk must be in [1, {}]", table.len())));
    }
    let dataset = load_dataset(&args.dataset, &table)?;

    let sweep_config = SweepConfig {
        k_values: k_values.clone(),
        hidden_dims: resolved.hidden_dims.clone(),
        init_scale: resolved.init_scale,
        loss: resolved.loss_config(),
        opt: resolved.opt_config(),
        epochs: resolved.epochs,
        lr_decay: resolved.decay,
        k_pred: args.topk,
        train_fraction: args.train_fraction,
        seed: resolved.seed,
    };
    let rows = sweep_k(&dataset, &table, &sweep_config)?;
    let csv = sweep_to_csv(&rows);
    fs::write(&args.output, &csv)
        .map_err(|e| anyhow::anyhow!("writing {}: {e}", args.output.display()))?;

    let mut manifest = Manifest::new("sweep-k");
    manifest.push_input("dataset", &args.dataset)?;
    manifest.push_input("embeddings", &args.embeddings)?;
    if let Some(path) = &args.config {
        manifest.push_input("config", path)?;
    }
    resolved.record(&mut manifest);
    manifest.push(
        "cfg.k_list",
        k_values
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(","),
    );
    manifest.push("cfg.train_fraction", args.train_fraction);
    manifest.push("cfg.topk", args.topk);
    manifest.push("cfg.normalize_embeddings", args.normalize_embeddings);
    manifest.push_output("sweep", &args.output);
    manifest.write(&sibling_manifest(&args.output))?;

    print!("{csv}");
    Ok(())
}
