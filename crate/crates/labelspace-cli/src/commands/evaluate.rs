use std::fs;
use std::path::PathBuf;

use clap::Args;
use labelspace::dataset::load_dataset;
use labelspace::embeddings::load_embeddings_with;
use labelspace::eval::evaluate_with;
use labelspace::model::load_checkpoint;

use super::Context;
use crate::manifest::{sibling_manifest, Manifest};
use crate::{usage, CliResult};

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    /// Predicted labels per image.
    #[arg(long, default_value_t = 3)]
    topk: usize,
    #[arg(long, default_value = "metrics.csv")]
    output: PathBuf,
    #[arg(long)]
    normalize_embeddings: bool,
}

pub fn run(args: EvaluateArgs, ctx: &Context) -> CliResult<()> {
    let params = load_checkpoint(&args.checkpoint)?;
    let table = load_embeddings_with(&args.embeddings, args.normalize_embeddings)?;
    if args.topk == 0 || args.topk > table.len() {
        return Err(usage(format!(
            "--topk must be in [1, {}], got {}",
            table.len(),
            args.topk
        )));
    }
    let dataset = load_dataset(&args.dataset, &table)?;
    let report = evaluate_with(&params, &dataset, &table, args.topk, ctx.parallel)?;

    fs::write(&args.output, report.to_csv())
        .map_err(|e| anyhow::anyhow!("writing {}: {e}", args.output.display()))?;

    let mut manifest = Manifest::new("evaluate");
    manifest.push_input("checkpoint", &args.checkpoint)?;
    manifest.push_input("dataset", &args.dataset)?;
    manifest.push_input("embeddings", &args.embeddings)?;
    manifest.push("cfg.topk", args.topk);
    manifest.push("cfg.normalize_embeddings", args.normalize_embeddings);
    manifest.push_output("metrics", &args.output);
    manifest.write(&sibling_manifest(&args.output))?;

    print!("{}", report.render_table());
    println!("metrics CSV: {}", args.output.display());
    Ok(())
}
