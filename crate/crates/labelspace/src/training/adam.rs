//! Bias-corrected Adam.

use crate::error::{Error, Result};
use crate::model::ModelParams;

use super::backprop::Gradients;

/// Learning rate paired with a pretrained backbone in the full-scale
/// reference experiments; from-scratch desk training uses the conventional
/// 1e-3 default instead.
pub const PAPER_LEARNING_RATE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct OptConfig {
    pub learning_rate: f64,
    /// First-moment decay (momentum).
    pub beta1: f64,
    /// Second-moment decay.
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for OptConfig {
    fn default() -> Self {
        OptConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl OptConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate must be finite and > 0"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::config("beta1 and beta2 must be in [0, 1)"));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::config("epsilon must be finite and > 0"));
        }
        Ok(())
    }
}

/// First and second moment accumulators, shaped like the parameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    first: Gradients,
    second: Gradients,
    step: u64,
    config: OptConfig,
}

impl AdamState {
    pub fn new(params: &ModelParams, config: OptConfig) -> Result<Self> {
        config.validate()?;
        Ok(AdamState {
            first: Gradients::zeros_like(params),
            second: Gradients::zeros_like(params),
            step: 0,
            config,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn learning_rate(&self) -> f64 {
        self.config.learning_rate
    }

    /// Adjusts the learning rate for subsequent steps (epoch decay).
    pub fn set_learning_rate(&mut self, learning_rate: f64) -> Result<()> {
        if !(learning_rate.is_finite() && learning_rate > 0.0) {
            return Err(Error::config("learning_rate must be finite and > 0"));
        }
        self.config.learning_rate = learning_rate;
        Ok(())
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(
    state: &mut AdamState,
    params: &mut ModelParams,
    grads: &Gradients,
) -> Result<()> {
    if !grads.matches_shape(params) || !state.first.matches_shape(params) {
        return Err(Error::config("gradient shape does not match parameters"));
    }
    state.step += 1;
    let t = state.step as i32;
    let cfg = &state.config;
    let bias1 = 1.0 - cfg.beta1.powi(t);
    let bias2 = 1.0 - cfg.beta2.powi(t);

    let update = |param: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / bias1;
        let v_hat = *v / bias2;
        *param -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    };

    for (l, layer) in params.layers.iter_mut().enumerate() {
        let gw = grads.layers[l].weights.as_slice();
        let mw = state.first.layers[l].weights.as_mut_slice();
        let vw = state.second.layers[l].weights.as_mut_slice();
        for (i, p) in layer.weights.as_mut_slice().iter_mut().enumerate() {
            update(p, &mut mw[i], &mut vw[i], gw[i]);
        }
        let gb = &grads.layers[l].biases;
        let mb = &mut state.first.layers[l].biases;
        let vb = &mut state.second.layers[l].biases;
        for (i, p) in layer.biases.iter_mut().enumerate() {
            update(p, &mut mb[i], &mut vb[i], gb[i]);
        }
    }
    Ok(())
}
