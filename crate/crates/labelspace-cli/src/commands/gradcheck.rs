use std::path::PathBuf;

use clap::Args;
use labelspace::training::{run_grad_check, GradCheckConfig};

use super::Context;
use crate::manifest::Manifest;
use crate::{usage, CliError, CliResult};

#[derive(Args, Debug)]
pub struct GradCheckArgs {
    /// Random (architecture, instance) draws to verify.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Central-difference step. [1e-7, 1e-3] is the accurate range; coarser
    /// steps demonstrate truncation error.
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
    /// Maximum allowed relative error between analytic and numeric
    /// gradients.
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "grad-check.manifest")]
    manifest: PathBuf,
}

pub fn run(args: GradCheckArgs, _ctx: &Context) -> CliResult<()> {
    if args.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    if !(args.step >= 1e-7 && args.step <= 1e-1) {
        return Err(usage("--step must be in [1e-7, 1e-1]"));
    }
    if !(args.tolerance.is_finite() && args.tolerance > 0.0) {
        return Err(usage("--tolerance must be finite and > 0"));
    }

    let summary = run_grad_check(&GradCheckConfig {
        trials: args.trials,
        step: args.step,
        seed: args.seed,
    })?;

    let mut manifest = Manifest::new("grad-check");
    manifest.push("cfg.trials", args.trials);
    manifest.push("cfg.step", args.step);
    manifest.push("cfg.tolerance", args.tolerance);
    manifest.push("seed", args.seed);
    manifest.write(&args.manifest)?;

    println!(
        "grad-check: trials={} checked={} skipped={} worst_rel_error={:.3e}",
        summary.trials, summary.checked, summary.skipped, summary.worst_rel_error
    );
    if summary.worst_rel_error > args.tolerance {
        return Err(CliError::Tolerance(format!(
            "worst relative error {:.3e} exceeds tolerance {:.3e} at step {:.1e}",
            summary.worst_rel_error, args.tolerance, args.step
        )));
    }
    println!("gradients verified within {:.1e}", args.tolerance);
    Ok(())
}
