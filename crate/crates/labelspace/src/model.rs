//! The encoder from input features to a transformation matrix, and the
//! transform/distance primitives over label word vectors.
//!
//! The encoder is a feed-forward stack: rectified affine hidden layers, then
//! a purely affine head whose `k·d` outputs are reshaped row-major into the
//! `k × d` transformation matrix. Applying the matrix to a label's word
//! vector and taking the L2 norm gives that label's distance from the
//! origin; small distance means relevant.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{l2_norm, Matrix};
use crate::rng::stream;

/// Encoder architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub feature_dim: usize,
    /// Widths of the rectified hidden layers; may be empty for a single
    /// affine map.
    pub hidden_dims: Vec<usize>,
    /// Rows of the output transformation (the dimension labels are carried
    /// into).
    pub transform_dim: usize,
    /// Word-vector dimension, i.e. columns of the output transformation.
    pub word_dim: usize,
    /// Weight initialization half-range, in units of 1/sqrt(fan_in). Zero
    /// gives an all-zero (degenerate) initialization.
    pub init_scale: f64,
}

/// Desk-scale default transform dimension.
pub const DESK_TRANSFORM_DIM: usize = 8;
/// Transform dimension used by the full-scale reference experiments.
pub const PAPER_TRANSFORM_DIM: usize = 100;

impl ModelConfig {
    /// Desk-scale configuration for a given input/word dimensionality: a
    /// purely affine encoder with an 8-row transformation.
    ///
    /// The affine encoder mirrors the full-scale training regime, where a
    /// fixed pretrained feature extractor feeds one trainable affine output
    /// layer; it is also what per-instance training converges with inside a
    /// desk-scale epoch budget.
    pub fn desk(feature_dim: usize, word_dim: usize) -> Self {
        ModelConfig {
            feature_dim,
            hidden_dims: Vec::new(),
            transform_dim: DESK_TRANSFORM_DIM,
            word_dim,
            init_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_dim == 0 {
            return Err(Error::config("feature_dim must be positive"));
        }
        if self.transform_dim == 0 || self.word_dim == 0 {
            return Err(Error::config("transform_dim and word_dim must be positive"));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::config("hidden layer widths must be positive"));
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return Err(Error::config("init_scale must be finite and >= 0"));
        }
        Ok(())
    }

    /// Layer input/output sizes: `[feature_dim, hidden..., k·d]`.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden_dims.len() + 2);
        sizes.push(self.feature_dim);
        sizes.extend_from_slice(&self.hidden_dims);
        sizes.push(self.output_len());
        sizes
    }

    /// Length of the head output vector, `transform_dim * word_dim`.
    pub fn output_len(&self) -> usize {
        self.transform_dim * self.word_dim
    }
}

/// One affine layer: `weights` is `out × in`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

/// Encoder parameters. Immutable during inference; the training loop owns
/// them exclusively while updating.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub layers: Vec<DenseLayer>,
    pub config: ModelConfig,
}

/// Initializes parameters: weights uniform in
/// `±init_scale / sqrt(fan_in)`, biases zero. Deterministic given the seed.
pub fn init_params(config: &ModelConfig, seed: u64) -> Result<ModelParams> {
    config.validate()?;
    let mut rng = stream(seed, "init");
    let sizes = config.layer_sizes();
    let mut layers = Vec::with_capacity(sizes.len() - 1);
    for pair in sizes.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let bound = config.init_scale / (fan_in as f64).sqrt();
        let data: Vec<f64> = (0..fan_out * fan_in)
            .map(|_| {
                if bound == 0.0 {
                    0.0
                } else {
                    rng.gen_range(-bound..=bound)
                }
            })
            .collect();
        layers.push(DenseLayer {
            weights: Matrix::from_vec(fan_out, fan_in, data),
            biases: vec![0.0; fan_out],
        });
    }
    Ok(ModelParams {
        layers,
        config: config.clone(),
    })
}

impl ModelParams {
    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.rows() * l.weights.cols() + l.biases.len())
            .sum()
    }

    /// Runs the encoder: rectified hidden layers, affine head, row-major
    /// reshape of the head output into the transformation matrix.
    pub fn forward_transform(&self, features: &[f64]) -> Result<TransformMatrix> {
        let (output, _) = self.forward_cached(features)?;
        Ok(TransformMatrix::from_matrix(Matrix::from_vec(
            self.config.transform_dim,
            self.config.word_dim,
            output,
        )))
    }

    /// Forward pass that also returns every layer input, as the backward
    /// pass needs them. `activations[l]` is the input to layer `l`.
    pub(crate) fn forward_cached(&self, features: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        if features.len() != self.config.feature_dim {
            return Err(Error::DimMismatch {
                what: "features",
                expected: self.config.feature_dim,
                actual: features.len(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("features contain non-finite values"));
        }
        let mut activations = Vec::with_capacity(self.layers.len());
        let mut current = features.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            activations.push(current.clone());
            let mut z = layer.weights.matvec(&current);
            for (zi, bi) in z.iter_mut().zip(&layer.biases) {
                *zi += bi;
            }
            if l != last {
                for zi in &mut z {
                    if *zi < 0.0 {
                        *zi = 0.0;
                    }
                }
            }
            current = z;
        }
        Ok((current, activations))
    }
}

/// The `k × d` matrix produced per input; rows carry word vectors into the
/// transformed space.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformMatrix {
    mat: Matrix,
}

impl TransformMatrix {
    pub fn from_matrix(mat: Matrix) -> Self {
        TransformMatrix { mat }
    }

    /// Number of rows (the transformed dimension).
    pub fn transform_dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn word_dim(&self) -> usize {
        self.mat.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.mat
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut Matrix {
        &mut self.mat
    }

    pub fn row(&self, r: usize) -> Result<&[f64]> {
        if r >= self.mat.rows() {
            return Err(Error::IndexOutOfRange {
                what: "transform row",
                index: r,
                len: self.mat.rows(),
            });
        }
        Ok(self.mat.row(r))
    }

    /// Carries a word vector into the transformed space: the matrix-vector
    /// product.
    pub fn transform_label(&self, word: &[f64]) -> Result<Vec<f64>> {
        self.check_word(word)?;
        Ok(self.mat.matvec(word))
    }

    /// Distance of the transformed word vector from the origin,
    /// `||A w||_2`.
    pub fn label_distance(&self, word: &[f64]) -> Result<f64> {
        self.check_word(word)?;
        Ok(l2_norm(&self.mat.matvec(word)))
    }

    fn check_word(&self, word: &[f64]) -> Result<()> {
        if word.len() != self.mat.cols() {
            return Err(Error::DimMismatch {
                what: "word vector",
                expected: self.mat.cols(),
                actual: word.len(),
            });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Checkpoint format
// ---------------------------------------------------------------------------
//
// Self-describing binary container, all integers little-endian u64 unless
// noted:
//
//   magic  b"LSPC"
//   version u32 (currently 1)
//   feature_dim, transform_dim, word_dim, init_scale (f64),
//   hidden count, hidden dims...
//   tensor count, then per tensor: name (len + utf8 bytes),
//   rank, shape dims..., f64 little-endian payload.
//
// Floats are stored bit-exactly, so save/load round trips are byte-exact.

const CHECKPOINT_MAGIC: &[u8; 4] = b"LSPC";
const CHECKPOINT_VERSION: u32 = 1;

struct CheckpointWriter<W: Write> {
    out: W,
}

impl<W: Write> CheckpointWriter<W> {
    fn u32(&mut self, v: u32) -> std::io::Result<()> {
        self.out.write_all(&v.to_le_bytes())
    }
    fn u64(&mut self, v: u64) -> std::io::Result<()> {
        self.out.write_all(&v.to_le_bytes())
    }
    fn f64(&mut self, v: f64) -> std::io::Result<()> {
        self.out.write_all(&v.to_le_bytes())
    }
    fn str(&mut self, s: &str) -> std::io::Result<()> {
        self.u64(s.len() as u64)?;
        self.out.write_all(s.as_bytes())
    }
    fn tensor(&mut self, name: &str, shape: &[usize], data: &[f64]) -> std::io::Result<()> {
        self.str(name)?;
        self.u64(shape.len() as u64)?;
        for &d in shape {
            self.u64(d as u64)?;
        }
        for &v in data {
            self.f64(v)?;
        }
        Ok(())
    }
}

/// Saves parameters to the binary checkpoint format.
pub fn save_checkpoint(params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = CheckpointWriter {
        out: BufWriter::new(file),
    };
    let cfg = &params.config;
    let write = |w: &mut CheckpointWriter<BufWriter<File>>| -> std::io::Result<()> {
        w.out.write_all(CHECKPOINT_MAGIC)?;
        w.u32(CHECKPOINT_VERSION)?;
        w.u64(cfg.feature_dim as u64)?;
        w.u64(cfg.transform_dim as u64)?;
        w.u64(cfg.word_dim as u64)?;
        w.f64(cfg.init_scale)?;
        w.u64(cfg.hidden_dims.len() as u64)?;
        for &h in &cfg.hidden_dims {
            w.u64(h as u64)?;
        }
        w.u64(params.layers.len() as u64 * 2)?;
        for (l, layer) in params.layers.iter().enumerate() {
            w.tensor(
                &format!("layer{l}.weights"),
                &[layer.weights.rows(), layer.weights.cols()],
                layer.weights.as_slice(),
            )?;
            w.tensor(&format!("layer{l}.biases"), &[layer.biases.len()], &layer.biases)?;
        }
        w.out.flush()
    };
    write(&mut w).map_err(|e| Error::io(path, e))
}

struct CheckpointReader<'p, R: Read> {
    input: R,
    path: &'p Path,
}

impl<'p, R: Read> CheckpointReader<'p, R> {
    fn bad(&self, msg: impl Into<String>) -> Error {
        Error::Checkpoint {
            path: self.path.to_path_buf(),
            msg: msg.into(),
        }
    }
    fn bytes(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; n];
        self.input
            .read_exact(&mut buf)
            .map_err(|_| self.bad("unexpected end of file"))?;
        Ok(buf)
    }
    fn u32(&mut self) -> Result<u32> {
        let b = self.bytes(4)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64> {
        let b = self.bytes(8)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }
    fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| self.bad(format!("size field {v} overflows usize")))
    }
    fn f64(&mut self) -> Result<f64> {
        let b = self.bytes(8)?;
        Ok(f64::from_le_bytes(b.try_into().expect("8 bytes")))
    }
    fn str(&mut self) -> Result<String> {
        let len = self.usize()?;
        if len > 1 << 20 {
            return Err(self.bad("unreasonable string length"));
        }
        let bytes = self.bytes(len)?;
        String::from_utf8(bytes).map_err(|_| self.bad("non-utf8 tensor name"))
    }
}

/// Loads a checkpoint written by [`save_checkpoint`], validating shapes
/// against the embedded configuration.
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = CheckpointReader {
        input: BufReader::new(file),
        path,
    };

    let magic = r.bytes(4)?;
    if magic != CHECKPOINT_MAGIC {
        return Err(r.bad("bad magic, not a checkpoint file"));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(r.bad(format!(
            "unsupported version {version}, expected {CHECKPOINT_VERSION}"
        )));
    }
    let feature_dim = r.usize()?;
    let transform_dim = r.usize()?;
    let word_dim = r.usize()?;
    let init_scale = r.f64()?;
    let hidden_count = r.usize()?;
    if hidden_count > 1 << 16 {
        return Err(r.bad("unreasonable hidden layer count"));
    }
    let mut hidden_dims = Vec::with_capacity(hidden_count);
    for _ in 0..hidden_count {
        hidden_dims.push(r.usize()?);
    }
    let config = ModelConfig {
        feature_dim,
        hidden_dims,
        transform_dim,
        word_dim,
        init_scale,
    };
    config.validate().map_err(|e| r.bad(e.to_string()))?;

    let sizes = config.layer_sizes();
    let tensor_count = r.usize()?;
    if tensor_count != (sizes.len() - 1) * 2 {
        return Err(r.bad(format!(
            "expected {} tensors, found {tensor_count}",
            (sizes.len() - 1) * 2
        )));
    }
    let mut layers = Vec::with_capacity(sizes.len() - 1);
    for (l, pair) in sizes.windows(2).enumerate() {
        let (fan_in, fan_out) = (pair[0], pair[1]);

        let name = r.str()?;
        if name != format!("layer{l}.weights") {
            return Err(r.bad(format!("unexpected tensor {name:?}")));
        }
        let rank = r.usize()?;
        if rank != 2 {
            return Err(r.bad(format!("{name}: expected rank 2, got {rank}")));
        }
        let (rows, cols) = (r.usize()?, r.usize()?);
        if rows != fan_out || cols != fan_in {
            return Err(r.bad(format!(
                "{name}: shape {rows}x{cols} inconsistent with config ({fan_out}x{fan_in})"
            )));
        }
        let mut weights = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            weights.push(r.f64()?);
        }

        let name = r.str()?;
        if name != format!("layer{l}.biases") {
            return Err(r.bad(format!("unexpected tensor {name:?}")));
        }
        let rank = r.usize()?;
        if rank != 1 {
            return Err(r.bad(format!("{name}: expected rank 1, got {rank}")));
        }
        let len = r.usize()?;
        if len != fan_out {
            return Err(r.bad(format!(
                "{name}: length {len} inconsistent with config ({fan_out})"
            )));
        }
        let mut biases = Vec::with_capacity(len);
        for _ in 0..len {
            biases.push(r.f64()?);
        }

        let finite = weights.iter().chain(&biases).all(|v| v.is_finite());
        if !finite {
            return Err(r.bad(format!("layer {l} contains non-finite parameters")));
        }
        layers.push(DenseLayer {
            weights: Matrix::from_vec(fan_out, fan_in, weights),
            biases,
        });
    }

    Ok(ModelParams { layers, config })
}
