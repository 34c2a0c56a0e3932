use std::fs;
use std::path::PathBuf;

use clap::Args;
use labelspace::dataset::{generate_synthetic, SyntheticSpec};

use super::Context;
use crate::manifest::Manifest;
use crate::{usage, CliResult};

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Vocabulary size (at least 2).
    #[arg(long, default_value_t = 50)]
    labels: usize,
    /// Word-vector dimension.
    #[arg(long, default_value_t = 20)]
    dim: usize,
    /// Input feature dimension.
    #[arg(long, default_value_t = 16)]
    feature_dim: usize,
    /// Rows of the hidden planted transformation.
    #[arg(long = "k-star", default_value_t = 2)]
    k_star: usize,
    #[arg(long, default_value_t = 2000)]
    instances: usize,
    /// Positive labels per instance (must be < labels).
    #[arg(long, default_value_t = 2)]
    positives: usize,
    /// Standard deviation of noise added to the planted transformation.
    #[arg(long, default_value_t = 0.0)]
    noise_std: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for dataset.txt, embeddings.txt, planted.txt, and the
    /// manifest.
    #[arg(long)]
    out_dir: PathBuf,
}

pub fn run(args: GenArgs, _ctx: &Context) -> CliResult<()> {
    if args.labels < 2 {
        return Err(usage("--labels must be at least 2"));
    }
    if args.positives == 0 || args.positives >= args.labels {
        return Err(usage("--positives must be in [1, labels)"));
    }
    if args.dim == 0 || args.feature_dim == 0 || args.k_star == 0 || args.instances == 0 {
        return Err(usage(
            "--dim, --feature-dim, --k-star, and --instances must be positive",
        ));
    }
    if !(args.noise_std.is_finite() && args.noise_std >= 0.0) {
        return Err(usage("--noise-std must be finite and >= 0"));
    }

    let spec = SyntheticSpec {
        num_labels: args.labels,
        word_dim: args.dim,
        feature_dim: args.feature_dim,
        planted_rows: args.k_star,
        num_instances: args.instances,
        positives_per_instance: args.positives,
        noise_std: args.noise_std,
        seed: args.seed,
    };
    let (dataset, table, truth) = generate_synthetic(&spec)?;

    fs::create_dir_all(&args.out_dir)
        .map_err(|e| anyhow::anyhow!("creating {}: {e}", args.out_dir.display()))?;
    let embeddings_path = args.out_dir.join("embeddings.txt");
    let dataset_path = args.out_dir.join("dataset.txt");
    let planted_path = args.out_dir.join("planted.txt");
    table.save(&embeddings_path)?;
    dataset.save(&dataset_path, &table)?;
    truth.save(&planted_path)?;

    let mut manifest = Manifest::new("gen-synthetic");
    manifest.push("cfg.labels", args.labels);
    manifest.push("cfg.dim", args.dim);
    manifest.push("cfg.feature_dim", args.feature_dim);
    manifest.push("cfg.k_star", args.k_star);
    manifest.push("cfg.instances", args.instances);
    manifest.push("cfg.positives", args.positives);
    manifest.push("cfg.noise_std", args.noise_std);
    manifest.push("seed", args.seed);
    manifest.push_output("embeddings", &embeddings_path);
    manifest.push_output("dataset", &dataset_path);
    manifest.push_output("planted", &planted_path);
    manifest.write(&args.out_dir.join("gen-synthetic.manifest"))?;

    println!(
        "generated {} instances over {} labels (density {:.2}) into {}",
        dataset.len(),
        table.len(),
        dataset.label_density(),
        args.out_dir.display()
    );
    Ok(())
}
