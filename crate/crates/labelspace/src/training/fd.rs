//! Central finite-difference verification of the analytic gradients.
//!
//! The loss is piecewise smooth: hinge terms switch on and off, rectifier
//! units open and close, and transformed norms lose differentiability at
//! zero. The checker compares analytic and numeric derivatives coordinate by
//! coordinate and skips any coordinate whose perturbation crosses one of
//! those boundaries, where no agreement can be expected.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{l2_norm, Matrix};
use crate::model::{init_params, ModelConfig, ModelParams, TransformMatrix};
use crate::rng::{derive_seed, standard_normal, stream};

use super::backprop::backprop;
use super::loss::LossConfig;

/// Relative-error floor: differences below this magnitude are compared
/// absolutely.
const REL_FLOOR: f64 = 1e-6;
/// Transformed norms below this are treated as non-smooth and skipped.
const NORM_GUARD: f64 = 1e-3;

/// Outcome of one finite-difference sweep over all parameters.
#[derive(Debug, Clone, Copy)]
pub struct FdCheckReport {
    /// Worst relative error across checked coordinates; 0 when none checked.
    pub max_rel_error: f64,
    pub checked: usize,
    /// Coordinates within `step` of a hinge kink, rectifier flip, or
    /// vanishing norm.
    pub skipped: usize,
}

struct Probe {
    loss: f64,
    hinge_active: Vec<bool>,
    rectifier_open: Vec<bool>,
    min_norm: f64,
}

fn probe(
    params: &ModelParams,
    features: &[f64],
    positives: &[&[f64]],
    negatives: &[&[f64]],
    margin: f64,
) -> Result<Probe> {
    let (output, activations) = params.forward_cached(features)?;
    let rectifier_open = activations[1..]
        .iter()
        .flat_map(|h| h.iter().map(|&v| v > 0.0))
        .collect();
    let transform = TransformMatrix::from_matrix(Matrix::from_vec(
        params.config.transform_dim,
        params.config.word_dim,
        output,
    ));

    let mut min_norm = f64::INFINITY;
    let mut avg_pos = 0.0;
    for p in positives {
        let norm = l2_norm(&transform.matrix().matvec(p));
        min_norm = min_norm.min(norm);
        avg_pos += norm;
    }
    avg_pos /= positives.len() as f64;

    let mut loss = 0.0;
    let mut hinge_active = Vec::with_capacity(negatives.len());
    for neg in negatives {
        let norm = l2_norm(&transform.matrix().matvec(neg));
        min_norm = min_norm.min(norm);
        let term = margin + avg_pos - norm;
        if term > 0.0 {
            loss += term;
            hinge_active.push(true);
        } else {
            hinge_active.push(false);
        }
    }
    Ok(Probe {
        loss,
        hinge_active,
        rectifier_open,
        min_norm,
    })
}

enum Tensor {
    Weights,
    Biases,
}

fn read(params: &ModelParams, layer: usize, tensor: &Tensor, idx: usize) -> f64 {
    match tensor {
        Tensor::Weights => params.layers[layer].weights.as_slice()[idx],
        Tensor::Biases => params.layers[layer].biases[idx],
    }
}

fn write(params: &mut ModelParams, layer: usize, tensor: &Tensor, idx: usize, value: f64) {
    match tensor {
        Tensor::Weights => params.layers[layer].weights.as_mut_slice()[idx] = value,
        Tensor::Biases => params.layers[layer].biases[idx] = value,
    }
}

/// Compares the analytic gradient against central differences over every
/// scalar parameter.
///
/// Central differences are second-order accurate in `step`; steps in
/// `[1e-7, 1e-3]` give agreement around 1e-4 or better at 64-bit precision.
/// Coarser steps up to 1e-1 are accepted so callers can demonstrate the
/// truncation-error failure mode.
pub fn finite_diff_check(
    params: &ModelParams,
    features: &[f64],
    positives: &[&[f64]],
    negatives: &[&[f64]],
    config: &LossConfig,
    step: f64,
) -> Result<FdCheckReport> {
    if !(1e-7..=1e-1).contains(&step) {
        return Err(Error::config(format!(
            "finite-difference step must be in [1e-7, 1e-1], got {step}"
        )));
    }
    let (_, analytic) = backprop(params, features, positives, negatives, config)?;
    let base = probe(params, features, positives, negatives, config.margin)?;

    let mut work = params.clone();
    let mut max_rel_error = 0.0f64;
    let mut checked = 0;
    let mut skipped = 0;
    for layer in 0..params.layers.len() {
        let weight_len = params.layers[layer].weights.rows() * params.layers[layer].weights.cols();
        let bias_len = params.layers[layer].biases.len();
        for (tensor, len) in [(Tensor::Weights, weight_len), (Tensor::Biases, bias_len)] {
            for idx in 0..len {
                let origin = read(params, layer, &tensor, idx);
                write(&mut work, layer, &tensor, idx, origin + step);
                let plus = probe(&work, features, positives, negatives, config.margin)?;
                write(&mut work, layer, &tensor, idx, origin - step);
                let minus = probe(&work, features, positives, negatives, config.margin)?;
                write(&mut work, layer, &tensor, idx, origin);

                let crosses_kink = plus.hinge_active != base.hinge_active
                    || minus.hinge_active != base.hinge_active
                    || plus.rectifier_open != base.rectifier_open
                    || minus.rectifier_open != base.rectifier_open;
                let near_zero_norm =
                    base.min_norm.min(plus.min_norm).min(minus.min_norm) <= NORM_GUARD;
                if crosses_kink || near_zero_norm {
                    skipped += 1;
                    continue;
                }

                let numeric = (plus.loss - minus.loss) / (2.0 * step);
                let ana = match tensor {
                    Tensor::Weights => analytic.layers[layer].weights.as_slice()[idx],
                    Tensor::Biases => analytic.layers[layer].biases[idx],
                };
                let denom = numeric.abs().max(ana.abs()).max(REL_FLOOR);
                let rel = (numeric - ana).abs() / denom;
                max_rel_error = max_rel_error.max(rel);
                checked += 1;
            }
        }
    }
    Ok(FdCheckReport {
        max_rel_error,
        checked,
        skipped,
    })
}

/// Randomized gradient verification sweep.
#[derive(Debug, Clone)]
pub struct GradCheckConfig {
    pub trials: usize,
    pub step: f64,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            trials: 100,
            step: 1e-5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GradCheckSummary {
    pub trials: usize,
    pub worst_rel_error: f64,
    pub checked: usize,
    pub skipped: usize,
}

/// Runs `finite_diff_check` over randomly drawn architectures, parameters,
/// and training tuples; returns the worst relative error seen.
pub fn run_grad_check(config: &GradCheckConfig) -> Result<GradCheckSummary> {
    if config.trials == 0 {
        return Err(Error::config("trials must be at least 1"));
    }
    let mut rng = stream(config.seed, "grad-check");
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut skipped = 0;
    for trial in 0..config.trials {
        let feature_dim = rng.gen_range(2..=10);
        let word_dim = rng.gen_range(2..=12);
        let transform_dim = rng.gen_range(1..=5);
        let hidden_dims: Vec<usize> = (0..rng.gen_range(0..=2usize))
            .map(|_| rng.gen_range(3..=16))
            .collect();
        let model_cfg = ModelConfig {
            feature_dim,
            hidden_dims,
            transform_dim,
            word_dim,
            init_scale: 1.0,
        };
        let params = init_params(
            &model_cfg,
            derive_seed(config.seed, &format!("grad-check-init-{trial}")),
        )?;
        let features: Vec<f64> = (0..feature_dim).map(|_| standard_normal(&mut rng)).collect();
        let draw_vec = |rng: &mut crate::rng::SeededRng| -> Vec<f64> {
            let mut v: Vec<f64> = (0..word_dim).map(|_| standard_normal(rng)).collect();
            let norm = l2_norm(&v);
            if norm > 0.0 {
                let scale = rng.gen_range(0.5..2.0) / norm;
                for x in &mut v {
                    *x *= scale;
                }
            }
            v
        };
        let positives: Vec<Vec<f64>> = (0..rng.gen_range(1..=3usize))
            .map(|_| draw_vec(&mut rng))
            .collect();
        let negatives: Vec<Vec<f64>> = (0..rng.gen_range(2..=8usize))
            .map(|_| draw_vec(&mut rng))
            .collect();
        let loss_cfg = LossConfig {
            margin: rng.gen_range(0.25..1.25),
            ..LossConfig::default()
        };
        let pos_refs: Vec<&[f64]> = positives.iter().map(Vec::as_slice).collect();
        let neg_refs: Vec<&[f64]> = negatives.iter().map(Vec::as_slice).collect();
        let report = finite_diff_check(
            &params,
            &features,
            &pos_refs,
            &neg_refs,
            &loss_cfg,
            config.step,
        )?;
        worst = worst.max(report.max_rel_error);
        checked += report.checked;
        skipped += report.skipped;
    }
    Ok(GradCheckSummary {
        trials: config.trials,
        worst_rel_error: worst,
        checked,
        skipped,
    })
}
