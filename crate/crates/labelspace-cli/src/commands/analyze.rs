use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::Args;
use labelspace::analysis::{evaluate_voting, test_set_jaccard, JaccardHistogram};
use labelspace::dataset::load_dataset;
use labelspace::embeddings::load_embeddings_with;
use labelspace::eval::{evaluate_with, MetricsReport};
use labelspace::model::load_checkpoint;

use super::Context;
use crate::manifest::Manifest;
use crate::{usage, CliResult};

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    /// Per-classifier top counts for the voting comparison, comma-separated.
    #[arg(long, default_value = "1,3,5")]
    vote_n: String,
    /// Per-classifier top count for the Jaccard diversity statistics.
    #[arg(long, default_value_t = 5)]
    jaccard_n: usize,
    /// Predicted labels per image for the voting metrics.
    #[arg(long, default_value_t = 3)]
    topk: usize,
    /// Directory for voting_metrics.csv, jaccard.csv, jaccard_hist.txt, and
    /// the manifest.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    normalize_embeddings: bool,
}

fn metrics_row(out: &mut String, predictor: &str, m: &MetricsReport) {
    let _ = writeln!(
        out,
        "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
        predictor,
        m.per_class_precision,
        m.per_class_recall,
        m.per_class_f1,
        m.overall_precision,
        m.overall_recall,
        m.overall_f1
    );
}

pub fn run(args: AnalyzeArgs, ctx: &Context) -> CliResult<()> {
    let vote_counts: Vec<usize> = args
        .vote_n
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("bad --vote-n entry {part:?}")))
        })
        .collect::<CliResult<_>>()?;

    let params = load_checkpoint(&args.checkpoint)?;
    let table = load_embeddings_with(&args.embeddings, args.normalize_embeddings)?;
    let vocab = table.len();
    if args.topk == 0 || args.topk > vocab {
        return Err(usage(format!("--topk must be in [1, {vocab}]")));
    }
    if args.jaccard_n == 0 || args.jaccard_n > vocab {
        return Err(usage(format!("--jaccard-n must be in [1, {vocab}]")));
    }
    if vote_counts.is_empty() || vote_counts.iter().any(|&n| n == 0 || n > vocab) {
        return Err(usage(format!("--vote-n entries must be in [1, {vocab}]")));
    }
    let dataset = load_dataset(&args.dataset, &table)?;

    fs::create_dir_all(&args.out_dir)
        .map_err(|e| anyhow::anyhow!("creating {}: {e}", args.out_dir.display()))?;

    // Voting metrics for each N, then the full-distance predictor.
    let mut voting_csv = String::from("predictor,c_p,c_r,c_f1,o_p,o_r,o_f1\n");
    for &n in &vote_counts {
        let report = evaluate_voting(&params, &dataset, &table, n, args.topk, ctx.parallel)?;
        metrics_row(&mut voting_csv, &format!("vote-{n}"), &report);
    }
    let full = evaluate_with(&params, &dataset, &table, args.topk, ctx.parallel)?;
    metrics_row(&mut voting_csv, "full", &full);
    let voting_path = args.out_dir.join("voting_metrics.csv");
    fs::write(&voting_path, &voting_csv)
        .map_err(|e| anyhow::anyhow!("writing {}: {e}", voting_path.display()))?;

    // Jaccard diversity needs at least two row classifiers.
    let transform_dim = params.config.transform_dim;
    let mut jaccard_note = String::new();
    let mut outputs: Vec<(String, PathBuf)> = vec![("voting_metrics".into(), voting_path.clone())];
    if transform_dim >= 2 {
        let summary = test_set_jaccard(&params, &dataset, &table, args.jaccard_n, ctx.parallel)?;
        let mut jaccard_csv = String::from("id,mean_jaccard\n");
        for (instance, value) in dataset.instances.iter().zip(&summary.per_image) {
            let _ = writeln!(jaccard_csv, "{},{:.6}", instance.id, value);
        }
        let jaccard_path = args.out_dir.join("jaccard.csv");
        fs::write(&jaccard_path, &jaccard_csv)
            .map_err(|e| anyhow::anyhow!("writing {}: {e}", jaccard_path.display()))?;
        let hist = JaccardHistogram::from_values(&summary.per_image);
        let hist_path = args.out_dir.join("jaccard_hist.txt");
        fs::write(&hist_path, hist.to_text())
            .map_err(|e| anyhow::anyhow!("writing {}: {e}", hist_path.display()))?;
        outputs.push(("jaccard".into(), jaccard_path));
        outputs.push(("jaccard_hist".into(), hist_path));
        let _ = write!(
            jaccard_note,
            "jaccard(top-{}): mean {:.4}, std {:.4} over {} images",
            args.jaccard_n,
            summary.mean,
            summary.std_dev,
            summary.per_image.len()
        );
    } else {
        jaccard_note.push_str("jaccard skipped: model has a single transform row");
    }

    let mut manifest = Manifest::new("analyze");
    manifest.push_input("checkpoint", &args.checkpoint)?;
    manifest.push_input("embeddings", &args.embeddings)?;
    manifest.push_input("dataset", &args.dataset)?;
    manifest.push("cfg.vote_n", args.vote_n.replace(' ', ""));
    manifest.push("cfg.jaccard_n", args.jaccard_n);
    manifest.push("cfg.topk", args.topk);
    manifest.push("cfg.normalize_embeddings", args.normalize_embeddings);
    for (name, path) in &outputs {
        manifest.push_output(name, path);
    }
    manifest.write(&args.out_dir.join("analyze.manifest"))?;

    print!("{voting_csv}");
    println!("{jaccard_note}");
    Ok(())
}
