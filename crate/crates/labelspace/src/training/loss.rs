//! The hinge rank loss and its subgradient with respect to the
//! transformation matrix.
//!
//! For a training tuple with positive word vectors `{p_i}` and sampled
//! negative word vectors `{n_j}`, the loss is
//!
//! ```text
//! L = sum_j max(0, m + avg_i ||A p_i|| - ||A n_j||)
//! ```
//!
//! Each negative contributes an independent hinge term; a term is "active"
//! when the negative fails to clear the average positive norm by the margin.
//! The average over positives (rather than the closest positive) keeps
//! mislabeled or poorly sampled positives from dominating the loss.

use crate::error::{Error, Result};
use crate::linalg::{l2_norm, Matrix};
use crate::model::TransformMatrix;

/// Hinge rank loss settings.
#[derive(Debug, Clone)]
pub struct LossConfig {
    /// Margin each negative must clear beyond the average positive norm.
    pub margin: f64,
    /// Negatives sampled per instance visit.
    pub negatives_per_instance: usize,
    /// Guard added to transformed-norm denominators in gradients; keeps the
    /// subgradient bounded where `||A v|| = 0`.
    pub epsilon_norm: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            margin: 1.0,
            negatives_per_instance: 40,
            epsilon_norm: 1e-8,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.margin.is_finite() && self.margin > 0.0) {
            return Err(Error::config(format!(
                "margin must be finite and > 0, got {}",
                self.margin
            )));
        }
        if self.negatives_per_instance == 0 {
            return Err(Error::config("negatives_per_instance must be at least 1"));
        }
        if !(self.epsilon_norm > 0.0 && self.epsilon_norm <= 1e-6) {
            return Err(Error::config(format!(
                "epsilon_norm must be in (0, 1e-6], got {}",
                self.epsilon_norm
            )));
        }
        Ok(())
    }
}

fn check_inputs(
    transform: &TransformMatrix,
    positives: &[&[f64]],
    negatives: &[&[f64]],
    margin: f64,
) -> Result<()> {
    if positives.is_empty() {
        return Err(Error::EmptyInput("positive vector list"));
    }
    if negatives.is_empty() {
        return Err(Error::EmptyInput("negative vector list"));
    }
    if !(margin.is_finite() && margin > 0.0) {
        return Err(Error::config(format!("margin must be > 0, got {margin}")));
    }
    let d = transform.word_dim();
    for v in positives.iter().chain(negatives.iter()) {
        if v.len() != d {
            return Err(Error::DimMismatch {
                what: "word vector",
                expected: d,
                actual: v.len(),
            });
        }
    }
    Ok(())
}

/// Average transformed norm over the positives.
fn average_positive_norm(transform: &TransformMatrix, positives: &[&[f64]]) -> f64 {
    let total: f64 = positives
        .iter()
        .map(|p| l2_norm(&transform.matrix().matvec(p)))
        .sum();
    total / positives.len() as f64
}

/// Computes the hinge rank loss and the per-negative active flags.
///
/// Flag `j` is true exactly when negative `j`'s hinge term is positive.
pub fn hinge_rank_loss(
    transform: &TransformMatrix,
    positives: &[&[f64]],
    negatives: &[&[f64]],
    margin: f64,
) -> Result<(f64, Vec<bool>)> {
    check_inputs(transform, positives, negatives, margin)?;
    let avg_pos = average_positive_norm(transform, positives);
    let mut loss = 0.0;
    let mut active = Vec::with_capacity(negatives.len());
    for neg in negatives {
        let term = margin + avg_pos - l2_norm(&transform.matrix().matvec(neg));
        if term > 0.0 {
            loss += term;
            active.push(true);
        } else {
            active.push(false);
        }
    }
    Ok((loss, active))
}

/// Subgradient of the hinge rank loss with respect to the transformation
/// matrix.
///
/// Uses `d||Av||/dA = (Av) vᵀ / ||Av||` with the denominator guarded by
/// `epsilon_norm`; the result is the zero matrix when no negative is active.
pub fn loss_gradient_wrt_transform(
    transform: &TransformMatrix,
    positives: &[&[f64]],
    negatives: &[&[f64]],
    margin: f64,
    epsilon_norm: f64,
) -> Result<Matrix> {
    if !(epsilon_norm > 0.0 && epsilon_norm <= 1e-6) {
        return Err(Error::config(format!(
            "epsilon_norm must be in (0, 1e-6], got {epsilon_norm}"
        )));
    }
    Ok(loss_and_gradient(transform, positives, negatives, margin, epsilon_norm)?.gradient)
}

pub(crate) struct LossGradient {
    pub loss: f64,
    pub gradient: Matrix,
    pub active_count: usize,
}

/// Shared single-pass computation of loss, flags, and the gradient.
pub(crate) fn loss_and_gradient(
    transform: &TransformMatrix,
    positives: &[&[f64]],
    negatives: &[&[f64]],
    margin: f64,
    epsilon_norm: f64,
) -> Result<LossGradient> {
    check_inputs(transform, positives, negatives, margin)?;
    let k = transform.transform_dim();
    let d = transform.word_dim();

    // Positive side: norms for the average, and the shared gradient part
    // (1/|P|) Σ (Ap_i) p_iᵀ / max(||Ap_i||, ε) that every active negative
    // contributes.
    let mut avg_pos = 0.0;
    let mut positive_part = Matrix::zeros(k, d);
    let inv_count = 1.0 / positives.len() as f64;
    for p in positives {
        let ap = transform.matrix().matvec(p);
        let norm = l2_norm(&ap);
        avg_pos += norm;
        positive_part.add_scaled_outer(inv_count / norm.max(epsilon_norm), &ap, p);
    }
    avg_pos *= inv_count;

    let mut loss = 0.0;
    let mut active_count = 0;
    let mut gradient = Matrix::zeros(k, d);
    for neg in negatives {
        let an = transform.matrix().matvec(neg);
        let norm = l2_norm(&an);
        let term = margin + avg_pos - norm;
        if term > 0.0 {
            loss += term;
            active_count += 1;
            gradient.add_scaled_outer(-1.0 / norm.max(epsilon_norm), &an, neg);
        }
    }
    if active_count > 0 {
        let scale = active_count as f64;
        for (g, p) in gradient
            .as_mut_slice()
            .iter_mut()
            .zip(positive_part.as_slice())
        {
            *g += scale * p;
        }
    }
    Ok(LossGradient {
        loss,
        gradient,
        active_count,
    })
}
