//! Multilabel instances, negative sampling, synthetic planted-structure data,
//! and train/test splitting.
//!
//! The dataset text format is one instance per line,
//! `"id | f1 f2 ... ff | label1 label2 ..."`, with `#` comment lines and a
//! `#dims f` header declaring the feature dimension before the first
//! instance.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::embeddings::{random_embeddings, LabelEmbeddingTable};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::TransformMatrix;
use crate::rng::{standard_normal, stream, SeededRng};

/// One training or test example: an input feature vector (the stand-in for an
/// image) and the indices of its relevant labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: String,
    pub features: Vec<f64>,
    /// Sorted, deduplicated label indices.
    pub positives: Vec<usize>,
}

impl Instance {
    pub fn new(id: impl Into<String>, features: Vec<f64>, mut positives: Vec<usize>) -> Self {
        positives.sort_unstable();
        positives.dedup();
        Instance {
            id: id.into(),
            features,
            positives,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub instances: Vec<Instance>,
    pub feature_dim: usize,
    pub vocab_size: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Mean number of positive labels per instance.
    pub fn label_density(&self) -> f64 {
        if self.instances.is_empty() {
            return 0.0;
        }
        let total: usize = self.instances.iter().map(|i| i.positives.len()).sum();
        total as f64 / self.instances.len() as f64
    }

    /// Writes the dataset in the text format `load_dataset` reads.
    pub fn save(&self, path: impl AsRef<Path>, table: &LabelEmbeddingTable) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        let _ = writeln!(out, "#dims {}", self.feature_dim);
        for instance in &self.instances {
            let _ = write!(out, "{} |", instance.id);
            for v in &instance.features {
                let _ = write!(out, " {v}");
            }
            let _ = write!(out, " |");
            for &p in &instance.positives {
                let _ = write!(out, " {}", table.label(p)?);
            }
            out.push('\n');
        }
        let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Loads a dataset file, resolving label names against `table`.
pub fn load_dataset(path: impl AsRef<Path>, table: &LabelEmbeddingTable) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut feature_dim: Option<usize> = None;
    let mut instances = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(dims) = rest.strip_prefix("dims") {
                let declared: usize = dims.trim().parse().map_err(|_| {
                    Error::parse(path, line_no, format!("malformed #dims header {trimmed:?}"))
                })?;
                feature_dim = Some(declared);
            }
            continue;
        }

        let sections: Vec<&str> = trimmed.split('|').collect();
        if sections.len() != 3 {
            return Err(Error::parse(
                path,
                line_no,
                "expected \"id | features | labels\"",
            ));
        }
        let id = sections[0].trim();
        if id.is_empty() {
            return Err(Error::parse(path, line_no, "empty instance id"));
        }
        let dim = feature_dim
            .ok_or_else(|| Error::parse(path, line_no, "missing #dims header before instances"))?;

        let mut features = Vec::with_capacity(dim);
        for field in sections[1].split_whitespace() {
            let value: f64 = field.parse().map_err(|_| {
                Error::parse(path, line_no, format!("cannot parse feature {field:?}"))
            })?;
            if !value.is_finite() {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("non-finite feature {field:?}"),
                ));
            }
            features.push(value);
        }
        if features.len() != dim {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected {dim} features, got {}", features.len()),
            ));
        }

        let mut positives = Vec::new();
        for name in sections[2].split_whitespace() {
            let index = table
                .index_of(name)
                .map_err(|_| Error::parse(path, line_no, format!("unknown label {name:?}")))?;
            positives.push(index);
        }
        if positives.is_empty() {
            return Err(Error::parse(path, line_no, "empty positive label set"));
        }
        instances.push(Instance::new(id, features, positives));
    }

    let feature_dim =
        feature_dim.ok_or_else(|| Error::parse(path, 1, "missing #dims header"))?;
    Ok(Dataset {
        instances,
        feature_dim,
        vocab_size: table.len(),
    })
}

/// Samples negative label indices for an instance: uniform without
/// replacement from the complement of its positive set.
///
/// Returns `min(count, vocab_size - |positives|)` indices, sorted ascending.
/// Errors when the positives cover the whole vocabulary.
pub fn sample_negatives(
    instance: &Instance,
    vocab_size: usize,
    count: usize,
    rng: &mut SeededRng,
) -> Result<Vec<usize>> {
    if count == 0 {
        return Err(Error::config("negative sample count must be at least 1"));
    }
    let positives: HashSet<usize> = instance.positives.iter().copied().collect();
    let eligible: Vec<usize> = (0..vocab_size).filter(|i| !positives.contains(i)).collect();
    if eligible.is_empty() {
        return Err(Error::EmptyComplement);
    }
    let take = count.min(eligible.len());
    let mut sampled: Vec<usize> = rand::seq::index::sample(rng, eligible.len(), take)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    sampled.sort_unstable();
    Ok(sampled)
}

/// Parameters of the synthetic planted-structure generator.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub num_labels: usize,
    pub word_dim: usize,
    pub feature_dim: usize,
    /// Rows of the hidden transformation the generator plants.
    pub planted_rows: usize,
    pub num_instances: usize,
    pub positives_per_instance: usize,
    pub noise_std: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_labels < 2 {
            return Err(Error::config("num_labels must be at least 2"));
        }
        if self.word_dim == 0 || self.feature_dim == 0 || self.planted_rows == 0 {
            return Err(Error::config(
                "word_dim, feature_dim, and planted_rows must be positive",
            ));
        }
        if self.num_instances == 0 {
            return Err(Error::config("num_instances must be positive"));
        }
        if self.positives_per_instance == 0 || self.positives_per_instance >= self.num_labels {
            return Err(Error::config(
                "positives_per_instance must be in [1, num_labels)",
            ));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::config("noise_std must be finite and >= 0"));
        }
        Ok(())
    }
}

/// The hidden linear map behind a synthetic dataset: feature vectors to
/// planted transformation entries.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedTruth {
    /// `(planted_rows * word_dim) x feature_dim`, row-major over the planted
    /// transformation's entries.
    pub map: Matrix,
    pub planted_rows: usize,
    pub word_dim: usize,
}

impl PlantedTruth {
    /// Reconstructs the noise-free planted transformation for a feature
    /// vector.
    pub fn transform_for(&self, features: &[f64]) -> TransformMatrix {
        let flat = self.map.matvec(features);
        TransformMatrix::from_matrix(Matrix::from_vec(self.planted_rows, self.word_dim, flat))
    }

    /// Writes the map as a text file: a `"planted_rows word_dim feature_dim"`
    /// header, then one row of the map per line.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} {} {}",
            self.planted_rows,
            self.word_dim,
            self.map.cols()
        );
        for r in 0..self.map.rows() {
            let row = self.map.row(r);
            let mut first = true;
            for v in row {
                if !first {
                    out.push(' ');
                }
                let _ = write!(out, "{v}");
                first = false;
            }
            out.push('\n');
        }
        let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Relative distance gap the generator requires between the last positive
/// and the first negative of every instance. Feature vectors whose planted
/// ranking has a narrower boundary are redrawn: without a separation margin,
/// relevance on some instances comes down to near ties that no trained model
/// could resolve, and recovery would not be a measurable target.
const BOUNDARY_SEPARATION: f64 = 0.15;
const MAX_REDRAWS: usize = 100_000;

/// Generates a synthetic dataset with genuinely input-conditioned relevance.
///
/// A hidden linear map sends each random feature vector to a planted
/// transformation; the instance's positives are the labels whose word vectors
/// the planted transformation carries closest to the origin, separated from
/// the nearest negative by a relative gap of at least [`BOUNDARY_SEPARATION`].
/// A model family that can represent the hidden map can therefore recover the
/// labeling exactly when `noise_std` is zero.
pub fn generate_synthetic(
    spec: &SyntheticSpec,
) -> Result<(Dataset, LabelEmbeddingTable, PlantedTruth)> {
    spec.validate()?;
    let table = random_embeddings(spec.num_labels, spec.word_dim, spec.seed)?;

    let mut rng = stream(spec.seed, "synthesis");
    let out_len = spec.planted_rows * spec.word_dim;
    // Map entries scale with 1/sqrt(feature_dim) so planted transformation
    // entries stay O(1) for unit-scale features.
    let scale = 1.0 / (spec.feature_dim as f64).sqrt();
    let map_data: Vec<f64> = (0..out_len * spec.feature_dim)
        .map(|_| scale * standard_normal(&mut rng))
        .collect();
    let truth = PlantedTruth {
        map: Matrix::from_vec(out_len, spec.feature_dim, map_data),
        planted_rows: spec.planted_rows,
        word_dim: spec.word_dim,
    };

    let id_width = (spec.num_instances.max(2) - 1).to_string().len().max(4);
    let mut instances = Vec::with_capacity(spec.num_instances);
    let mut redraws = 0usize;
    while instances.len() < spec.num_instances {
        let features: Vec<f64> = (0..spec.feature_dim)
            .map(|_| standard_normal(&mut rng))
            .collect();
        let mut planted = truth.transform_for(&features);
        if spec.noise_std > 0.0 {
            let entries = planted.matrix_mut().as_mut_slice();
            for e in entries.iter_mut() {
                *e += spec.noise_std * standard_normal(&mut rng);
            }
        }
        let mut scored: Vec<(f64, usize)> = (0..table.len())
            .map(|label| {
                let w = table.vector(label).expect("label index in range");
                (planted.label_distance(w).expect("dims agree"), label)
            })
            .collect();
        scored.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        let last_positive = scored[spec.positives_per_instance - 1].0;
        let first_negative = scored[spec.positives_per_instance].0;
        if first_negative - last_positive < BOUNDARY_SEPARATION * last_positive.max(1e-12) {
            redraws += 1;
            if redraws > MAX_REDRAWS {
                return Err(Error::config(
                    "synthetic generator exhausted redraws looking for \
                     boundary-separated instances; the label space is too \
                     crowded for this configuration",
                ));
            }
            continue;
        }
        let positives: Vec<usize> = scored
            .iter()
            .take(spec.positives_per_instance)
            .map(|&(_, label)| label)
            .collect();
        let n = instances.len();
        instances.push(Instance::new(
            format!("syn-{n:0id_width$}"),
            features,
            positives,
        ));
    }

    let dataset = Dataset {
        instances,
        feature_dim: spec.feature_dim,
        vocab_size: table.len(),
    };
    Ok((dataset, table, truth))
}

/// Deterministic shuffled split into `(train, test)`.
///
/// The boundary is `round(len * train_fraction)`; both sides must end up
/// non-empty.
pub fn split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::config(format!(
            "train_fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let n = dataset.len();
    let train_len = (n as f64 * train_fraction).round() as usize;
    if train_len == 0 || train_len == n {
        return Err(Error::config(format!(
            "train_fraction {train_fraction} leaves an empty side for {n} instances"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(seed, "split"));
    let pick = |indices: &[usize]| Dataset {
        instances: indices.iter().map(|&i| dataset.instances[i].clone()).collect(),
        feature_dim: dataset.feature_dim,
        vocab_size: dataset.vocab_size,
    };
    Ok((pick(&order[..train_len]), pick(&order[train_len..])))
}

/// Draws a feature vector of the synthetic generator's distribution; used by
/// verification harnesses that need inputs without a dataset.
pub fn random_features(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..dim).map(|_| standard_normal(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table3() -> LabelEmbeddingTable {
        LabelEmbeddingTable::new(
            vec!["sky".into(), "sun".into(), "dog".into()],
            vec![vec![0.1, 0.2], vec![0.3, 0.4], vec![0.5, 0.6]],
            2,
        )
        .unwrap()
    }

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_instances_in_order() {
        let f = write_temp("#dims 2\nimg1 | 0.5 0.5 | sky sun\nimg2 | 1.0 0.0 | dog\n");
        let ds = load_dataset(f.path(), &table3()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.feature_dim, 2);
        assert_eq!(ds.instances[0].positives, vec![0, 1]);
        assert_eq!(ds.instances[1].id, "img2");
        assert_eq!(ds.instances[1].positives, vec![2]);
    }

    #[test]
    fn unknown_label_reports_line() {
        let f = write_temp("#dims 2\nimg1 | 0.5 0.5 | unicorn\n");
        match load_dataset(f.path(), &table3()) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("unicorn"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn feature_count_mismatch_reports_line() {
        let f = write_temp("#dims 3\nimg1 | 0.5 0.5 | sky\n");
        match load_dataset(f.path(), &table3()) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("expected 3 features"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_positive_set_rejected() {
        let f = write_temp("#dims 2\nimg1 | 0.5 0.5 |\n");
        match load_dataset(f.path(), &table3()) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("empty positive"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn label_density_matches_benchmark_figure() {
        // 57 two-label and 43 three-label instances average 2.43 labels per
        // instance, the density of the reference benchmark.
        let mut instances = Vec::new();
        for i in 0..57 {
            instances.push(Instance::new(format!("a{i}"), vec![0.0], vec![0, 1]));
        }
        for i in 0..43 {
            instances.push(Instance::new(format!("b{i}"), vec![0.0], vec![0, 1, 2]));
        }
        let ds = Dataset {
            instances,
            feature_dim: 1,
            vocab_size: 3,
        };
        assert!((ds.label_density() - 2.43).abs() < 1e-12);
    }

    #[test]
    fn save_load_round_trip() {
        let table = table3();
        let ds = Dataset {
            instances: vec![
                Instance::new("a", vec![0.25, -1.5], vec![0, 2]),
                Instance::new("b", vec![1.0, 0.0], vec![1]),
            ],
            feature_dim: 2,
            vocab_size: 3,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.txt");
        ds.save(&path, &table).unwrap();
        let reloaded = load_dataset(&path, &table).unwrap();
        assert_eq!(ds, reloaded);
    }

    #[test]
    fn negatives_disjoint_and_capped() {
        let inst = Instance::new("x", vec![0.0], vec![0, 2, 4]);
        let mut rng = stream(5, "negatives");
        let negs = sample_negatives(&inst, 81, 40, &mut rng).unwrap();
        assert_eq!(negs.len(), 40);
        for n in &negs {
            assert!(*n < 81);
            assert!(!inst.positives.contains(n));
        }
        let unique: HashSet<_> = negs.iter().collect();
        assert_eq!(unique.len(), negs.len(), "duplicates in {negs:?}");
    }

    #[test]
    fn exhausted_complement_returns_all_remaining() {
        let inst = Instance::new("x", vec![0.0], vec![0, 1, 2]);
        let mut rng = stream(5, "negatives");
        let negs = sample_negatives(&inst, 5, 40, &mut rng).unwrap();
        assert_eq!(negs, vec![3, 4]);
    }

    #[test]
    fn covering_positives_error() {
        let inst = Instance::new("x", vec![0.0], vec![0, 1, 2]);
        let mut rng = stream(5, "negatives");
        match sample_negatives(&inst, 3, 1, &mut rng) {
            Err(Error::EmptyComplement) => {}
            other => panic!("expected EmptyComplement, got {other:?}"),
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let inst = Instance::new("x", vec![0.0], vec![3]);
        let a = sample_negatives(&inst, 20, 5, &mut stream(9, "negatives")).unwrap();
        let b = sample_negatives(&inst, 20, 5, &mut stream(9, "negatives")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_uniformity_chi_square() {
        // vocab 20, one positive: 19 eligible labels, 10k single draws.
        let inst = Instance::new("x", vec![0.0], vec![7]);
        let mut rng = stream(123, "negatives");
        let draws = 10_000usize;
        let mut counts = [0usize; 20];
        for _ in 0..draws {
            let negs = sample_negatives(&inst, 20, 1, &mut rng).unwrap();
            counts[negs[0]] += 1;
        }
        assert_eq!(counts[7], 0);
        let p = 1.0 / 19.0;
        let expected = draws as f64 * p;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for (label, &count) in counts.iter().enumerate() {
            if label == 7 {
                continue;
            }
            let dev = (count as f64 - expected).abs();
            assert!(
                dev <= 3.0 * sigma,
                "label {label}: count {count}, expected {expected:.1} +- {:.1}",
                3.0 * sigma
            );
        }
    }

    #[test]
    fn synthetic_is_deterministic() {
        let spec = SyntheticSpec {
            num_labels: 12,
            word_dim: 6,
            feature_dim: 4,
            planted_rows: 2,
            num_instances: 30,
            positives_per_instance: 2,
            noise_std: 0.1,
            seed: 3,
        };
        let (d1, t1, g1) = generate_synthetic(&spec).unwrap();
        let (d2, t2, g2) = generate_synthetic(&spec).unwrap();
        assert_eq!(d1, d2);
        assert_eq!(t1, t2);
        assert_eq!(g1, g2);
    }

    #[test]
    fn noise_free_positives_minimize_planted_distance() {
        let spec = SyntheticSpec {
            num_labels: 25,
            word_dim: 8,
            feature_dim: 5,
            planted_rows: 3,
            num_instances: 100,
            positives_per_instance: 2,
            noise_std: 0.0,
            seed: 17,
        };
        let (dataset, table, truth) = generate_synthetic(&spec).unwrap();
        for instance in &dataset.instances {
            let planted = truth.transform_for(&instance.features);
            // Brute-force scan over the whole vocabulary.
            let mut dists: Vec<(f64, usize)> = (0..table.len())
                .map(|l| (planted.label_distance(table.vector(l).unwrap()).unwrap(), l))
                .collect();
            dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let best: Vec<usize> = {
                let mut b: Vec<usize> = dists[..2].iter().map(|&(_, l)| l).collect();
                b.sort_unstable();
                b
            };
            assert_eq!(instance.positives, best, "instance {}", instance.id);
            // Strict separation between the chosen set and the rest.
            assert!(dists[1].0 < dists[2].0, "tie at the boundary");
        }
    }

    #[test]
    fn split_is_exhaustive_and_deterministic() {
        let (dataset, _, _) = generate_synthetic(&SyntheticSpec {
            num_labels: 10,
            word_dim: 4,
            feature_dim: 3,
            planted_rows: 2,
            num_instances: 10,
            positives_per_instance: 1,
            noise_std: 0.0,
            seed: 1,
        })
        .unwrap();
        let (train, test) = split(&dataset, 0.7, 5).unwrap();
        assert_eq!(train.len(), 7);
        assert_eq!(test.len(), 3);
        let mut ids: Vec<&str> = train
            .instances
            .iter()
            .chain(&test.instances)
            .map(|i| i.id.as_str())
            .collect();
        ids.sort_unstable();
        let mut expected: Vec<&str> = dataset.instances.iter().map(|i| i.id.as_str()).collect();
        expected.sort_unstable();
        assert_eq!(ids, expected);

        let (train2, test2) = split(&dataset, 0.7, 5).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);
    }

    #[test]
    fn split_rejects_empty_sides() {
        let (dataset, _, _) = generate_synthetic(&SyntheticSpec {
            num_labels: 5,
            word_dim: 3,
            feature_dim: 2,
            planted_rows: 1,
            num_instances: 3,
            positives_per_instance: 1,
            noise_std: 0.0,
            seed: 1,
        })
        .unwrap();
        assert!(split(&dataset, 0.01, 0).is_err());
        assert!(split(&dataset, 0.99, 0).is_err());
        assert!(split(&dataset, 1.5, 0).is_err());
    }
}
