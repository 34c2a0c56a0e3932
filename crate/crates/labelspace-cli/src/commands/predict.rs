use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use labelspace::embeddings::load_embeddings_with;
use labelspace::eval::{prediction_dump_line, rank_labels};
use labelspace::model::load_checkpoint;
use labelspace::par;

use super::Context;
use crate::manifest::{sibling_manifest, Manifest};
use crate::{usage, CliResult};

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    /// Feature rows: `#dims f` header, then `id | f1 f2 ...` per line.
    /// Dataset files work too; their label section is ignored.
    #[arg(long)]
    features: PathBuf,
    /// Labels reported per row, best first.
    #[arg(long, default_value_t = 3)]
    topk: usize,
    #[arg(long, default_value = "predictions.txt")]
    output: PathBuf,
    #[arg(long)]
    normalize_embeddings: bool,
}

/// Parses feature rows; a third `| labels` section is tolerated and ignored.
fn load_feature_rows(path: &Path, expected_dim: usize) -> CliResult<Vec<(String, Vec<f64>)>> {
    let text = fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
    let mut declared: Option<usize> = None;
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(dims) = rest.trim().strip_prefix("dims") {
                declared = Some(dims.trim().parse().map_err(|_| {
                    anyhow::anyhow!("{}:{line_no}: malformed #dims header", path.display())
                })?);
            }
            continue;
        }
        let sections: Vec<&str> = line.split('|').collect();
        if sections.is_empty() || sections.len() > 3 {
            return Err(anyhow::anyhow!(
                "{}:{line_no}: expected \"id | features [| labels]\"",
                path.display()
            )
            .into());
        }
        if sections.len() < 2 {
            return Err(anyhow::anyhow!(
                "{}:{line_no}: missing feature section",
                path.display()
            )
            .into());
        }
        let id = sections[0].trim();
        if id.is_empty() {
            return Err(anyhow::anyhow!("{}:{line_no}: empty row id", path.display()).into());
        }
        let features: Vec<f64> = sections[1]
            .split_whitespace()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    anyhow::anyhow!(
                        "{}:{line_no}: cannot parse feature {field:?}",
                        path.display()
                    )
                })
            })
            .collect::<Result<_, _>>()?;
        let dim = declared.unwrap_or(expected_dim);
        if features.len() != dim {
            return Err(anyhow::anyhow!(
                "{}:{line_no}: expected {dim} features, got {}",
                path.display(),
                features.len()
            )
            .into());
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(
                anyhow::anyhow!("{}:{line_no}: non-finite feature value", path.display()).into(),
            );
        }
        rows.push((id.to_string(), features));
    }
    if rows.is_empty() {
        return Err(anyhow::anyhow!("{}: no feature rows", path.display()).into());
    }
    Ok(rows)
}

pub fn run(args: PredictArgs, ctx: &Context) -> CliResult<()> {
    let params = load_checkpoint(&args.checkpoint)?;
    let table = load_embeddings_with(&args.embeddings, args.normalize_embeddings)?;
    if args.topk == 0 || args.topk > table.len() {
        return Err(usage(format!(
            "--topk must be in [1, {}], got {}",
            table.len(),
            args.topk
        )));
    }
    let rows = load_feature_rows(&args.features, params.config.feature_dim)?;

    let lines: Vec<labelspace::Result<String>> = par::map_ordered(&rows, ctx.parallel, |(id, features)| {
        let ranking = rank_labels(&params, features, &table)?;
        prediction_dump_line(id, &ranking, args.topk, &table)
    });
    let mut out = String::new();
    for line in lines {
        out.push_str(&line?);
        out.push('\n');
    }
    fs::write(&args.output, out)
        .map_err(|e| anyhow::anyhow!("writing {}: {e}", args.output.display()))?;

    let mut manifest = Manifest::new("predict");
    manifest.push_input("checkpoint", &args.checkpoint)?;
    manifest.push_input("embeddings", &args.embeddings)?;
    manifest.push_input("features", &args.features)?;
    manifest.push("cfg.topk", args.topk);
    manifest.push("cfg.normalize_embeddings", args.normalize_embeddings);
    manifest.push_output("predictions", &args.output);
    manifest.write(&sibling_manifest(&args.output))?;

    println!(
        "wrote top-{} predictions for {} rows to {}",
        args.topk,
        rows.len(),
        args.output.display()
    );
    Ok(())
}
