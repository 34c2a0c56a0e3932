//! Inference and the multilabel metric suite.
//!
//! Prediction ranks the whole vocabulary by transformed L2 norm, ascending:
//! the smaller `||A w||`, the more relevant the label. Metrics follow the
//! standard multilabel protocol: overall precision/recall pool counts over
//! all test predictions, per-class precision/recall average uniformly over
//! classes, and F1 is the harmonic mean of each pair.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::dataset::Dataset;
use crate::embeddings::LabelEmbeddingTable;
use crate::error::{Error, Result};
use crate::model::{ModelParams, TransformMatrix};
use crate::par;

/// All labels ordered by ascending distance, ties broken by ascending label
/// index.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRanking {
    entries: Vec<(usize, f64)>,
}

impl PredictionRanking {
    /// Builds a ranking from one score per label.
    pub(crate) fn from_scores(scores: Vec<f64>) -> Self {
        let mut entries: Vec<(usize, f64)> = scores.into_iter().enumerate().collect();
        entries.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        PredictionRanking { entries }
    }

    /// `(label index, distance)` pairs, best first.
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Ranks every label in the table by its distance under the transformation.
pub fn rank_with_transform(
    transform: &TransformMatrix,
    table: &LabelEmbeddingTable,
) -> Result<PredictionRanking> {
    let mut scores = Vec::with_capacity(table.len());
    for i in 0..table.len() {
        scores.push(transform.label_distance(table.vector(i)?)?);
    }
    Ok(PredictionRanking::from_scores(scores))
}

/// Runs the encoder on `features` and ranks every label in the table.
pub fn rank_labels(
    params: &ModelParams,
    features: &[f64],
    table: &LabelEmbeddingTable,
) -> Result<PredictionRanking> {
    let transform = params.forward_transform(features)?;
    rank_with_transform(&transform, table)
}

/// First `k_pred` labels of the ranking.
pub fn predict_topk(ranking: &PredictionRanking, k_pred: usize) -> Result<Vec<usize>> {
    if k_pred == 0 || k_pred > ranking.len() {
        return Err(Error::IndexOutOfRange {
            what: "k_pred",
            index: k_pred,
            len: ranking.len(),
        });
    }
    Ok(ranking.entries[..k_pred].iter().map(|&(i, _)| i).collect())
}

/// One prediction-dump line: `id | labels best-first | distances`.
pub fn prediction_dump_line(
    id: &str,
    ranking: &PredictionRanking,
    k_pred: usize,
    table: &LabelEmbeddingTable,
) -> Result<String> {
    if k_pred == 0 || k_pred > ranking.len() {
        return Err(Error::IndexOutOfRange {
            what: "k_pred",
            index: k_pred,
            len: ranking.len(),
        });
    }
    let mut line = format!("{id} |");
    for &(label, _) in &ranking.entries[..k_pred] {
        let _ = write!(line, " {}", table.label(label)?);
    }
    let _ = write!(line, " |");
    for &(_, dist) in &ranking.entries[..k_pred] {
        let _ = write!(line, " {dist}");
    }
    Ok(line)
}

/// Per-class counting outcomes for one evaluation run.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassBreakdown {
    pub index: usize,
    pub label: String,
    /// Images where the class was predicted.
    pub predicted: usize,
    /// Images where the class is in the ground truth.
    pub actual: usize,
    /// Images where it was both predicted and true.
    pub correct: usize,
    /// `None` when the class was never predicted.
    pub precision: Option<f64>,
    /// `None` when the class was never true.
    pub recall: Option<f64>,
}

/// The six-number multilabel metric suite plus the per-class table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub per_class_precision: f64,
    pub per_class_recall: f64,
    pub per_class_f1: f64,
    pub overall_precision: f64,
    pub overall_recall: f64,
    pub overall_f1: f64,
    pub classes: Vec<ClassBreakdown>,
    /// Classes contributing to the per-class precision mean.
    pub precision_class_count: usize,
    /// Classes contributing to the per-class recall mean.
    pub recall_class_count: usize,
    pub total_predicted: usize,
    pub total_true: usize,
    pub total_correct: usize,
}

/// Harmonic mean of a precision/recall pair; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Computes the metric suite from per-instance predicted label sets.
///
/// Classes never predicted are excluded from the per-class precision mean,
/// and classes never true from the per-class recall mean; the exclusion
/// counts are reported.
pub fn metrics_from_predictions(
    predictions: &[Vec<usize>],
    test: &Dataset,
    table: &LabelEmbeddingTable,
) -> Result<MetricsReport> {
    if test.is_empty() {
        return Err(Error::EmptyInput("test dataset"));
    }
    if predictions.len() != test.len() {
        return Err(Error::config(format!(
            "{} predictions for {} instances",
            predictions.len(),
            test.len()
        )));
    }
    let vocab = table.len();
    let mut predicted_count = vec![0usize; vocab];
    let mut true_count = vec![0usize; vocab];
    let mut correct_count = vec![0usize; vocab];
    let mut total_predicted = 0usize;
    let mut total_true = 0usize;
    let mut total_correct = 0usize;

    for (prediction, instance) in predictions.iter().zip(&test.instances) {
        let truth: HashSet<usize> = instance.positives.iter().copied().collect();
        total_predicted += prediction.len();
        total_true += instance.positives.len();
        for &label in prediction {
            if label >= vocab {
                return Err(Error::IndexOutOfRange {
                    what: "predicted label",
                    index: label,
                    len: vocab,
                });
            }
            predicted_count[label] += 1;
            if truth.contains(&label) {
                correct_count[label] += 1;
                total_correct += 1;
            }
        }
        for &label in &instance.positives {
            if label >= vocab {
                return Err(Error::IndexOutOfRange {
                    what: "true label",
                    index: label,
                    len: vocab,
                });
            }
            true_count[label] += 1;
        }
    }

    let mut classes = Vec::with_capacity(vocab);
    let mut precision_sum = 0.0;
    let mut precision_classes = 0usize;
    let mut recall_sum = 0.0;
    let mut recall_classes = 0usize;
    for index in 0..vocab {
        let precision = (predicted_count[index] > 0)
            .then(|| correct_count[index] as f64 / predicted_count[index] as f64);
        let recall =
            (true_count[index] > 0).then(|| correct_count[index] as f64 / true_count[index] as f64);
        if let Some(p) = precision {
            precision_sum += p;
            precision_classes += 1;
        }
        if let Some(r) = recall {
            recall_sum += r;
            recall_classes += 1;
        }
        classes.push(ClassBreakdown {
            index,
            label: table.label(index)?.to_string(),
            predicted: predicted_count[index],
            actual: true_count[index],
            correct: correct_count[index],
            precision,
            recall,
        });
    }

    let per_class_precision = if precision_classes > 0 {
        precision_sum / precision_classes as f64
    } else {
        0.0
    };
    let per_class_recall = if recall_classes > 0 {
        recall_sum / recall_classes as f64
    } else {
        0.0
    };
    let overall_precision = if total_predicted > 0 {
        total_correct as f64 / total_predicted as f64
    } else {
        0.0
    };
    let overall_recall = if total_true > 0 {
        total_correct as f64 / total_true as f64
    } else {
        0.0
    };

    Ok(MetricsReport {
        per_class_precision,
        per_class_recall,
        per_class_f1: f1_score(per_class_precision, per_class_recall),
        overall_precision,
        overall_recall,
        overall_f1: f1_score(overall_precision, overall_recall),
        classes,
        precision_class_count: precision_classes,
        recall_class_count: recall_classes,
        total_predicted,
        total_true,
        total_correct,
    })
}

/// Evaluates top-`k_pred` predictions over the test set.
pub fn evaluate(
    params: &ModelParams,
    test: &Dataset,
    table: &LabelEmbeddingTable,
    k_pred: usize,
) -> Result<MetricsReport> {
    evaluate_with(params, test, table, k_pred, cfg!(feature = "parallel"))
}

/// [`evaluate`] with explicit control over the parallel map; results are
/// identical either way.
pub fn evaluate_with(
    params: &ModelParams,
    test: &Dataset,
    table: &LabelEmbeddingTable,
    k_pred: usize,
    parallel: bool,
) -> Result<MetricsReport> {
    if test.is_empty() {
        return Err(Error::EmptyInput("test dataset"));
    }
    if k_pred == 0 || k_pred > table.len() {
        return Err(Error::IndexOutOfRange {
            what: "k_pred",
            index: k_pred,
            len: table.len(),
        });
    }
    let predictions: Vec<Result<Vec<usize>>> =
        par::map_ordered(&test.instances, parallel, |instance| {
            let ranking = rank_labels(params, &instance.features, table)?;
            predict_topk(&ranking, k_pred)
        });
    let predictions: Vec<Vec<usize>> = predictions.into_iter().collect::<Result<_>>()?;
    metrics_from_predictions(&predictions, test, table)
}

impl MetricsReport {
    /// CSV export: one row per class, then a summary row carrying the six
    /// suite metrics.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("row,index,label,predicted,true,correct,precision,recall,c_p,c_r,c_f1,o_p,o_r,o_f1\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for c in &self.classes {
            let _ = writeln!(
                out,
                "class,{},{},{},{},{},{},{},,,,,,",
                c.index,
                c.label,
                c.predicted,
                c.actual,
                c.correct,
                opt(c.precision),
                opt(c.recall)
            );
        }
        let _ = writeln!(
            out,
            "summary,,,{},{},{},,,{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.total_predicted,
            self.total_true,
            self.total_correct,
            self.per_class_precision,
            self.per_class_recall,
            self.per_class_f1,
            self.overall_precision,
            self.overall_recall,
            self.overall_f1
        );
        out
    }

    /// Human-readable summary table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "metric      value");
        let _ = writeln!(out, "C-P     {:>9.4}", self.per_class_precision);
        let _ = writeln!(out, "C-R     {:>9.4}", self.per_class_recall);
        let _ = writeln!(out, "C-F1    {:>9.4}", self.per_class_f1);
        let _ = writeln!(out, "O-P     {:>9.4}", self.overall_precision);
        let _ = writeln!(out, "O-R     {:>9.4}", self.overall_recall);
        let _ = writeln!(out, "O-F1    {:>9.4}", self.overall_f1);
        let _ = writeln!(
            out,
            "classes in C-P mean: {}, in C-R mean: {} (of {})",
            self.precision_class_count,
            self.recall_class_count,
            self.classes.len()
        );
        out
    }
}
