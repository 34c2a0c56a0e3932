//! The training loop: shuffled per-instance visits with freshly resampled
//! negatives, backpropagation, and Adam updates.
//!
//! The loop owns the parameters and optimizer state exclusively; everything
//! is deterministic given the seed, down to byte-identical checkpoints.

use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;

use crate::dataset::{sample_negatives, Dataset};
use crate::embeddings::LabelEmbeddingTable;
use crate::error::{Error, Result};
use crate::model::{init_params, ModelConfig, ModelParams};
use crate::rng::stream;

use super::adam::{adam_step, AdamState, OptConfig};
use super::backprop::backprop_detail;
use super::loss::LossConfig;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub seed: u64,
    /// Multiplicative learning-rate factor applied after each epoch;
    /// 1.0 disables decay.
    pub lr_decay: f64,
}

impl TrainConfig {
    pub fn new(epochs: usize, seed: u64) -> Self {
        TrainConfig {
            epochs,
            seed,
            lr_decay: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr_decay.is_finite() && self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::config(format!(
                "lr_decay must be in (0, 1], got {}",
                self.lr_decay
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EpochStats {
    /// 1-based epoch number.
    pub epoch: usize,
    pub mean_loss: f64,
    /// Fraction of sampled negatives whose hinge term was active.
    pub violation_rate: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Resolved settings of the run, in a fixed order.
    pub settings: Vec<(String, String)>,
    pub epochs: Vec<EpochStats>,
    /// Instance visits skipped because the positives covered the vocabulary.
    pub skipped_instances: u64,
}

impl TrainReport {
    /// CSV with a `#`-prefixed settings header line, then one row per epoch.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# ");
        for (i, (key, value)) in self.settings.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{key}={value}");
        }
        out.push('\n');
        out.push_str("epoch,mean_loss,violation_rate,seconds\n");
        for e in &self.epochs {
            let _ = writeln!(
                out,
                "{},{:.6},{:.6},{:.3}",
                e.epoch, e.mean_loss, e.violation_rate, e.seconds
            );
        }
        out
    }
}

fn resolved_settings(
    model: &ModelConfig,
    loss: &LossConfig,
    opt: &OptConfig,
    train: &TrainConfig,
) -> Vec<(String, String)> {
    let hidden = if model.hidden_dims.is_empty() {
        "none".to_string()
    } else {
        model
            .hidden_dims
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(",")
    };
    vec![
        ("k".into(), model.transform_dim.to_string()),
        ("d".into(), model.word_dim.to_string()),
        ("f".into(), model.feature_dim.to_string()),
        ("hidden".into(), hidden),
        ("init_scale".into(), model.init_scale.to_string()),
        ("margin".into(), loss.margin.to_string()),
        ("negatives".into(), loss.negatives_per_instance.to_string()),
        ("lr".into(), opt.learning_rate.to_string()),
        ("beta1".into(), opt.beta1.to_string()),
        ("beta2".into(), opt.beta2.to_string()),
        ("eps".into(), opt.epsilon.to_string()),
        ("epochs".into(), train.epochs.to_string()),
        ("seed".into(), train.seed.to_string()),
        ("decay".into(), train.lr_decay.to_string()),
    ]
}

/// Trains a freshly initialized model on the dataset.
///
/// Each epoch visits the instances in a seeded shuffled order; each visit
/// resamples negatives, backpropagates, and applies one Adam step. Instances
/// whose positives cover the vocabulary are counted and skipped.
pub fn train(
    dataset: &Dataset,
    table: &LabelEmbeddingTable,
    model_config: &ModelConfig,
    loss_config: &LossConfig,
    opt_config: &OptConfig,
    train_config: &TrainConfig,
) -> Result<(ModelParams, TrainReport)> {
    loss_config.validate()?;
    opt_config.validate()?;
    train_config.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyInput("training dataset"));
    }
    if dataset.feature_dim != model_config.feature_dim {
        return Err(Error::DimMismatch {
            what: "dataset features",
            expected: model_config.feature_dim,
            actual: dataset.feature_dim,
        });
    }
    if table.dim() != model_config.word_dim {
        return Err(Error::DimMismatch {
            what: "word vectors",
            expected: model_config.word_dim,
            actual: table.dim(),
        });
    }
    if dataset.vocab_size != table.len() {
        return Err(Error::config(format!(
            "dataset vocabulary size {} does not match table size {}",
            dataset.vocab_size,
            table.len()
        )));
    }

    let mut params = init_params(model_config, train_config.seed)?;
    let mut adam = AdamState::new(&params, opt_config.clone())?;
    let mut shuffle_rng = stream(train_config.seed, "shuffle");
    let mut negatives_rng = stream(train_config.seed, "negatives");

    let mut report = TrainReport {
        settings: resolved_settings(model_config, loss_config, opt_config, train_config),
        epochs: Vec::with_capacity(train_config.epochs),
        skipped_instances: 0,
    };

    let vocab = table.len();
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    for epoch in 1..=train_config.epochs {
        let started = Instant::now();
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut visited = 0u64;
        let mut active_terms = 0u64;
        let mut total_terms = 0u64;
        for &idx in &order {
            let instance = &dataset.instances[idx];
            if instance.positives.len() >= vocab {
                report.skipped_instances += 1;
                continue;
            }
            let negatives = sample_negatives(
                instance,
                vocab,
                loss_config.negatives_per_instance,
                &mut negatives_rng,
            )?;
            let pos_vecs: Vec<&[f64]> = instance
                .positives
                .iter()
                .map(|&p| table.vector(p))
                .collect::<Result<_>>()?;
            let neg_vecs: Vec<&[f64]> = negatives
                .iter()
                .map(|&n| table.vector(n))
                .collect::<Result<_>>()?;
            let detail = backprop_detail(
                &params,
                &instance.features,
                &pos_vecs,
                &neg_vecs,
                loss_config,
            )?;
            adam_step(&mut adam, &mut params, &detail.grads)?;
            loss_sum += detail.loss;
            visited += 1;
            active_terms += detail.active_negatives as u64;
            total_terms += detail.total_negatives as u64;
        }
        report.epochs.push(EpochStats {
            epoch,
            mean_loss: if visited > 0 { loss_sum / visited as f64 } else { 0.0 },
            violation_rate: if total_terms > 0 {
                active_terms as f64 / total_terms as f64
            } else {
                0.0
            },
            seconds: started.elapsed().as_secs_f64(),
        });
        if train_config.lr_decay < 1.0 {
            let lr = adam.learning_rate() * train_config.lr_decay;
            adam.set_learning_rate(lr)?;
        }
    }

    Ok((params, report))
}
