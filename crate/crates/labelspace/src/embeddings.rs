//! Label vocabulary and word-vector storage.
//!
//! The on-disk format is the plain text interchange format used by word-vector
//! tooling: a `"<vocab_size> <dim>"` header line, then one
//! `"<label> <v1> ... <vdim>"` line per label. Vectors are stored raw; an
//! optional flag L2-normalizes rows on load (ranking by transformed norm is
//! scale-sensitive, so rescaling is never done silently).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::l2_norm;
use crate::rng::{standard_normal, stream};

/// Immutable table of labels and their word vectors.
///
/// Invariants, enforced at construction: label names are unique, non-empty,
/// and whitespace-free; every vector has exactly `dim` finite components;
/// there are at least 2 labels (a positive/negative partition must be
/// possible).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelEmbeddingTable {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<f64>,
    dim: usize,
}

impl LabelEmbeddingTable {
    pub fn new(labels: Vec<String>, vectors: Vec<Vec<f64>>, dim: usize) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::config(format!(
                "vocabulary needs at least 2 labels, got {}",
                labels.len()
            )));
        }
        if labels.len() != vectors.len() {
            return Err(Error::config(format!(
                "{} labels but {} vectors",
                labels.len(),
                vectors.len()
            )));
        }
        let mut index = HashMap::with_capacity(labels.len());
        let mut flat = Vec::with_capacity(labels.len() * dim);
        for (i, (label, vector)) in labels.iter().zip(&vectors).enumerate() {
            if label.is_empty() || label.chars().any(char::is_whitespace) {
                return Err(Error::config(format!(
                    "label {label:?} is empty or contains whitespace"
                )));
            }
            if index.insert(label.clone(), i).is_some() {
                return Err(Error::config(format!("duplicate label {label:?}")));
            }
            if vector.len() != dim {
                return Err(Error::DimMismatch {
                    what: "embedding vector",
                    expected: dim,
                    actual: vector.len(),
                });
            }
            if vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::config(format!(
                    "vector for label {label:?} has non-finite components"
                )));
            }
            flat.extend_from_slice(vector);
        }
        Ok(LabelEmbeddingTable {
            labels,
            index,
            vectors: flat,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> Result<&str> {
        self.labels
            .get(index)
            .map(String::as_str)
            .ok_or(Error::IndexOutOfRange {
                what: "label",
                index,
                len: self.labels.len(),
            })
    }

    /// Index of a label name.
    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Stored vector for a label index, unmodified.
    pub fn vector(&self, index: usize) -> Result<&[f64]> {
        if index >= self.labels.len() {
            return Err(Error::IndexOutOfRange {
                what: "label",
                index,
                len: self.labels.len(),
            });
        }
        Ok(&self.vectors[index * self.dim..(index + 1) * self.dim])
    }

    /// Stored vector for a label name, unmodified.
    pub fn vector_by_name(&self, label: &str) -> Result<&[f64]> {
        self.vector(self.index_of(label)?)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, label)| (label.as_str(), &self.vectors[i * self.dim..(i + 1) * self.dim]))
    }

    /// Writes the table in the text format `load_embeddings` reads.
    ///
    /// Floats are printed with the shortest representation that parses back
    /// to the same value, so a save/load round trip is exact.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.labels.len(), self.dim);
        for (label, vector) in self.iter() {
            let _ = write!(out, "{label}");
            for v in vector {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Loads a table from the text embedding format, keeping vectors raw.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<LabelEmbeddingTable> {
    load_embeddings_with(path, false)
}

/// Loads a table, optionally L2-normalizing each vector.
pub fn load_embeddings_with(path: impl AsRef<Path>, normalize: bool) -> Result<LabelEmbeddingTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty file, expected \"<vocab_size> <dim>\" header"))?;
    let header = header.map_err(|e| Error::io(path, e))?;
    let mut fields = header.split_whitespace();
    let vocab_size: usize = fields
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(path, 1, format!("malformed header {header:?}")))?;
    let dim: usize = fields
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(path, 1, format!("malformed header {header:?}")))?;
    if fields.next().is_some() {
        return Err(Error::parse(path, 1, format!("malformed header {header:?}")));
    }
    if dim == 0 {
        return Err(Error::parse(path, 1, "dimension must be positive"));
    }

    let mut labels = Vec::with_capacity(vocab_size);
    let mut vectors = Vec::with_capacity(vocab_size);
    let mut seen = HashMap::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let label = fields.next().expect("non-empty line has a first field");
        if let Some(prev) = seen.insert(label.to_string(), line_no) {
            return Err(Error::parse(
                path,
                line_no,
                format!("duplicate label {label:?} (first seen on line {prev})"),
            ));
        }
        let mut vector = Vec::with_capacity(dim);
        for field in fields {
            let value: f64 = field.parse().map_err(|_| {
                Error::parse(path, line_no, format!("cannot parse component {field:?}"))
            })?;
            if !value.is_finite() {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("non-finite component {field:?}"),
                ));
            }
            vector.push(value);
        }
        if vector.len() != dim {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected {dim} components, got {}", vector.len()),
            ));
        }
        if normalize {
            let norm = l2_norm(&vector);
            if norm > 0.0 {
                for v in &mut vector {
                    *v /= norm;
                }
            }
        }
        labels.push(label.to_string());
        vectors.push(vector);
    }

    if labels.len() != vocab_size {
        return Err(Error::parse(
            path,
            1,
            format!("header declares {vocab_size} labels, file has {}", labels.len()),
        ));
    }
    LabelEmbeddingTable::new(labels, vectors, dim)
}

/// Synthetic vocabulary: unit vectors drawn from a seeded standard normal.
///
/// A pure function of `(num_labels, dim, seed)`; labels are named
/// `label000`, `label001`, ...
pub fn random_embeddings(num_labels: usize, dim: usize, seed: u64) -> Result<LabelEmbeddingTable> {
    if num_labels < 2 {
        return Err(Error::config(format!(
            "vocabulary needs at least 2 labels, got {num_labels}"
        )));
    }
    if dim == 0 {
        return Err(Error::config("embedding dimension must be positive"));
    }
    let mut rng = stream(seed, "embeddings");
    let width = (num_labels.max(2) - 1).to_string().len().max(3);
    let mut labels = Vec::with_capacity(num_labels);
    let mut vectors = Vec::with_capacity(num_labels);
    for i in 0..num_labels {
        labels.push(format!("label{i:0width$}"));
        let mut v: Vec<f64> = (0..dim).map(|_| standard_normal(&mut rng)).collect();
        let mut norm = l2_norm(&v);
        while norm == 0.0 {
            // Vanishing probability, but normalization must stay defined.
            v = (0..dim).map(|_| standard_normal(&mut rng)).collect();
            norm = l2_norm(&v);
        }
        for x in &mut v {
            *x /= norm;
        }
        vectors.push(v);
    }
    LabelEmbeddingTable::new(labels, vectors, dim)
}
