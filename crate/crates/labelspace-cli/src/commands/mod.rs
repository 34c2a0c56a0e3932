pub mod analyze;
pub mod evaluate;
pub mod gen;
pub mod gradcheck;
pub mod predict;
pub mod sweep;
pub mod train;

use labelspace::model::ModelConfig;
use labelspace::training::{LossConfig, OptConfig, TrainConfig};

use crate::cfgfile::{parse_hidden_dims, ConfigFile};
use crate::manifest::Manifest;
use crate::{usage, CliResult, TrainKnobs};

/// Run-wide execution settings.
pub struct Context {
    pub parallel: bool,
}

/// Fully resolved training settings: flags over config file over defaults.
#[derive(Debug, Clone)]
pub struct ResolvedTraining {
    pub margin: f64,
    pub negatives: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub hidden_dims: Vec<usize>,
    pub init_scale: f64,
    pub decay: f64,
    pub epochs: usize,
    pub seed: u64,
    pub transform_dim: usize,
}

pub fn resolve_training(
    knobs: &TrainKnobs,
    config: Option<&ConfigFile>,
    epochs_flag: Option<usize>,
    seed_flag: Option<u64>,
    k_flag: Option<usize>,
) -> CliResult<ResolvedTraining> {
    fn pick<T: Copy + std::str::FromStr>(
        flag: Option<T>,
        config: Option<&ConfigFile>,
        key: &str,
        default: T,
    ) -> CliResult<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        if let Some(cfg) = config {
            if let Some(v) = cfg.get_parsed::<T>(key)? {
                return Ok(v);
            }
        }
        Ok(default)
    }

    let hidden_raw = match (&knobs.hidden, config.and_then(|c| c.get_raw("hidden_dims"))) {
        (Some(flag), _) => flag.clone(),
        (None, Some(cfg)) => cfg.to_string(),
        (None, None) => "none".to_string(),
    };

    let resolved = ResolvedTraining {
        margin: pick(knobs.margin, config, "margin", 1.0)?,
        negatives: pick(knobs.negatives, config, "negatives", 40)?,
        lr: pick(knobs.lr, config, "lr", 1e-3)?,
        beta1: pick(knobs.beta1, config, "beta1", 0.9)?,
        beta2: pick(knobs.beta2, config, "beta2", 0.999)?,
        eps: pick(knobs.eps, config, "eps", 1e-8)?,
        hidden_dims: parse_hidden_dims(&hidden_raw)?,
        init_scale: pick(knobs.init_scale, None, "init_scale", 1.0)?,
        decay: pick(knobs.decay, config, "decay", 1.0)?,
        epochs: pick(epochs_flag, config, "epochs", 30)?,
        seed: pick(seed_flag, config, "seed", 0)?,
        transform_dim: pick(k_flag, config, "k", 8)?,
    };

    if !(resolved.margin.is_finite() && resolved.margin > 0.0) {
        return Err(usage("margin must be finite and > 0"));
    }
    if resolved.negatives == 0 {
        return Err(usage("negatives must be at least 1"));
    }
    if !(resolved.lr.is_finite() && resolved.lr > 0.0) {
        return Err(usage("lr must be finite and > 0"));
    }
    if !(0.0..1.0).contains(&resolved.beta1) || !(0.0..1.0).contains(&resolved.beta2) {
        return Err(usage("beta1 and beta2 must be in [0, 1)"));
    }
    if !(resolved.eps.is_finite() && resolved.eps > 0.0) {
        return Err(usage("eps must be finite and > 0"));
    }
    if !(resolved.init_scale.is_finite() && resolved.init_scale >= 0.0) {
        return Err(usage("init-scale must be finite and >= 0"));
    }
    if !(resolved.decay.is_finite() && resolved.decay > 0.0 && resolved.decay <= 1.0) {
        return Err(usage("decay must be in (0, 1]"));
    }
    if resolved.transform_dim == 0 {
        return Err(usage("k must be at least 1"));
    }
    Ok(resolved)
}

impl ResolvedTraining {
    pub fn loss_config(&self) -> LossConfig {
        LossConfig {
            margin: self.margin,
            negatives_per_instance: self.negatives,
            ..LossConfig::default()
        }
    }

    pub fn opt_config(&self) -> OptConfig {
        OptConfig {
            learning_rate: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.eps,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            seed: self.seed,
            lr_decay: self.decay,
        }
    }

    pub fn model_config(&self, feature_dim: usize, word_dim: usize) -> ModelConfig {
        ModelConfig {
            feature_dim,
            hidden_dims: self.hidden_dims.clone(),
            transform_dim: self.transform_dim,
            word_dim,
            init_scale: self.init_scale,
        }
    }

    pub fn record(&self, manifest: &mut Manifest) {
        let hidden = self
            .hidden_dims
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(",");
        manifest.push("cfg.k", self.transform_dim);
        manifest.push("cfg.hidden", if hidden.is_empty() { "none" } else { &hidden });
        manifest.push("cfg.init_scale", self.init_scale);
        manifest.push("cfg.margin", self.margin);
        manifest.push("cfg.negatives", self.negatives);
        manifest.push("cfg.lr", self.lr);
        manifest.push("cfg.beta1", self.beta1);
        manifest.push("cfg.beta2", self.beta2);
        manifest.push("cfg.eps", self.eps);
        manifest.push("cfg.epochs", self.epochs);
        manifest.push("cfg.decay", self.decay);
        manifest.push("seed", self.seed);
    }
}
