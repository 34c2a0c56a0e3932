//! An image-conditioned label-space transformation model for multilabel
//! classification.
//!
//! Instead of embedding an input into a fixed label space, the model maps an
//! input feature vector to a `k × d` transformation matrix. The matrix carries
//! each label's `d`-dim word vector into a `k`-dim space where relevant labels
//! sit close to the origin and irrelevant labels land far from it. Training
//! uses a hinge rank loss over the average transformed-positive norm against
//! sampled negatives; prediction ranks the whole vocabulary by transformed
//! L2 norm.
//!
//! The crate is organized around that pipeline:
//!
//! - [`embeddings`]: label vocabulary and word-vector table (text format I/O)
//! - [`dataset`]: multilabel instances, negative sampling, synthetic
//!   planted-structure data, train/test splits
//! - [`model`]: feed-forward encoder producing the transformation matrix,
//!   plus checkpoint I/O
//! - [`training`]: hinge rank loss, analytic gradients with a
//!   finite-difference verifier, Adam, and the training loop
//! - [`eval`]: label ranking and the C-P/C-R/O-P/O-R/F1 metric suite
//! - [`analysis`]: per-row committee interpretation of the transformation
//!   matrix and the transform-dimension sweep
//!
//! All randomness flows from explicit seeds through named streams
//! ([`rng::stream`]); identical seeds give identical results, including
//! byte-identical checkpoints. Evaluation and analysis hot loops run on rayon
//! when the `parallel` feature (default) is enabled, with output bytes
//! independent of thread count.

pub mod analysis;
pub mod dataset;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod model;
pub mod par;
pub mod rng;
pub mod training;

pub use error::{Error, Result};
