//! End-to-end gradients: the loss subgradient chained through the row-major
//! reshape and the encoder's affine/rectifier layers.

use crate::error::Result;
use crate::linalg::Matrix;
use crate::model::ModelParams;

use super::loss::{loss_and_gradient, LossConfig};

/// Per-layer gradient tensors, shaped like the corresponding layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

/// Gradients for every parameter tensor of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrads>,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Gradients {
            layers: params
                .layers
                .iter()
                .map(|l| LayerGrads {
                    weights: Matrix::zeros(l.weights.rows(), l.weights.cols()),
                    biases: vec![0.0; l.biases.len()],
                })
                .collect(),
        }
    }

    pub fn matches_shape(&self, params: &ModelParams) -> bool {
        self.layers.len() == params.layers.len()
            && self.layers.iter().zip(&params.layers).all(|(g, p)| {
                g.weights.rows() == p.weights.rows()
                    && g.weights.cols() == p.weights.cols()
                    && g.biases.len() == p.biases.len()
            })
    }
}

pub(crate) struct BackpropDetail {
    pub loss: f64,
    pub grads: Gradients,
    pub active_negatives: usize,
    pub total_negatives: usize,
}

/// Loss and parameter gradients for one training tuple.
pub fn backprop(
    params: &ModelParams,
    features: &[f64],
    positives: &[&[f64]],
    negatives: &[&[f64]],
    config: &LossConfig,
) -> Result<(f64, Gradients)> {
    let detail = backprop_detail(params, features, positives, negatives, config)?;
    Ok((detail.loss, detail.grads))
}

pub(crate) fn backprop_detail(
    params: &ModelParams,
    features: &[f64],
    positives: &[&[f64]],
    negatives: &[&[f64]],
    config: &LossConfig,
) -> Result<BackpropDetail> {
    config.validate()?;
    let (output, activations) = params.forward_cached(features)?;
    let transform = crate::model::TransformMatrix::from_matrix(Matrix::from_vec(
        params.config.transform_dim,
        params.config.word_dim,
        output,
    ));
    let lg = loss_and_gradient(
        &transform,
        positives,
        negatives,
        config.margin,
        config.epsilon_norm,
    )?;

    // The head output is the transformation in row-major order, so the loss
    // gradient flattens into the head delta unchanged.
    let mut delta: Vec<f64> = lg.gradient.as_slice().to_vec();
    let mut layers: Vec<Option<LayerGrads>> = vec![None; params.layers.len()];
    for l in (0..params.layers.len()).rev() {
        let input = &activations[l];
        let mut weights = Matrix::zeros(delta.len(), input.len());
        weights.add_scaled_outer(1.0, &delta, input);
        layers[l] = Some(LayerGrads {
            weights,
            biases: delta.clone(),
        });
        if l > 0 {
            let mut upstream = params.layers[l].weights.matvec_transposed(&delta);
            // Rectifier gate: the layer input is the previous layer's
            // post-rectifier activation, zero exactly where the unit was
            // clamped.
            for (u, &h) in upstream.iter_mut().zip(input) {
                if h <= 0.0 {
                    *u = 0.0;
                }
            }
            delta = upstream;
        }
    }

    Ok(BackpropDetail {
        loss: lg.loss,
        grads: Gradients {
            layers: layers.into_iter().map(|g| g.expect("filled in reverse pass")).collect(),
        },
        active_negatives: lg.active_count,
        total_negatives: negatives.len(),
    })
}
