//! Hinge rank loss, analytic gradients through head and encoder,
//! finite-difference verification, Adam, and the training loop.

mod adam;
mod backprop;
mod fd;
mod loss;
mod trainer;

pub use adam::{adam_step, AdamState, OptConfig, PAPER_LEARNING_RATE};
pub use backprop::{backprop, Gradients, LayerGrads};
pub use fd::{
    finite_diff_check, run_grad_check, FdCheckReport, GradCheckConfig, GradCheckSummary,
};
pub use loss::{hinge_rank_loss, loss_gradient_wrt_transform, LossConfig};
pub use trainer::{train, EpochStats, TrainConfig, TrainReport};
