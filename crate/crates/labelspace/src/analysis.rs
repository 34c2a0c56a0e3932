//! Committee interpretation of the transformation matrix, plus the
//! transform-dimension sweep.
//!
//! Each row of the transformation can be read as an independent classifier:
//! its score for a label is the squared projection `(row · w)²`, which is
//! exactly that row's additive share of the full squared distance
//! `||A w||²`. Voting over per-row top lists aggregates the committee; the
//! pairwise Jaccard coefficient of per-row top lists measures how different
//! the committee members are.

use std::fmt::Write as _;

use crate::dataset::{split, Dataset};
use crate::embeddings::LabelEmbeddingTable;
use crate::error::{Error, Result};
use crate::eval::{
    evaluate_with, metrics_from_predictions, predict_topk, MetricsReport, PredictionRanking,
};
use crate::linalg::dot;
use crate::model::{ModelConfig, ModelParams, TransformMatrix};
use crate::par;
use crate::rng::derive_seed;
use crate::training::{train, LossConfig, OptConfig, TrainConfig};

/// Ranks all labels by one row's squared projection, ascending, ties by
/// index.
pub fn row_classifier_ranking(
    transform: &TransformMatrix,
    table: &LabelEmbeddingTable,
    row: usize,
) -> Result<PredictionRanking> {
    let row = transform.row(row)?;
    let mut scores = Vec::with_capacity(table.len());
    for i in 0..table.len() {
        let projection = dot(row, table.vector(i)?);
        scores.push(projection * projection);
    }
    Ok(PredictionRanking::from_scores(scores))
}

/// Committee vote: every row contributes its top `top_n` labels; labels are
/// ordered by descending vote count, ties by better mean per-row rank, then
/// by index; the first `k_pred` are returned.
pub fn committee_vote(
    transform: &TransformMatrix,
    table: &LabelEmbeddingTable,
    top_n: usize,
    k_pred: usize,
) -> Result<Vec<usize>> {
    let vocab = table.len();
    if top_n == 0 || top_n > vocab {
        return Err(Error::IndexOutOfRange {
            what: "top_n",
            index: top_n,
            len: vocab,
        });
    }
    if k_pred == 0 || k_pred > vocab {
        return Err(Error::IndexOutOfRange {
            what: "k_pred",
            index: k_pred,
            len: vocab,
        });
    }
    let (votes, rank_sums) = tally(transform, table, top_n)?;
    let mut order: Vec<usize> = (0..vocab).collect();
    order.sort_by(|&a, &b| {
        votes[b]
            .cmp(&votes[a])
            .then(rank_sums[a].cmp(&rank_sums[b]))
            .then(a.cmp(&b))
    });
    order.truncate(k_pred);
    Ok(order)
}

fn tally(
    transform: &TransformMatrix,
    table: &LabelEmbeddingTable,
    top_n: usize,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let vocab = table.len();
    let mut votes = vec![0usize; vocab];
    // Sum of rank positions across rows; with a fixed row count this orders
    // labels exactly like the mean rank, without any float ties.
    let mut rank_sums = vec![0usize; vocab];
    for r in 0..transform.transform_dim() {
        let ranking = row_classifier_ranking(transform, table, r)?;
        for (position, &(label, _)) in ranking.entries().iter().enumerate() {
            rank_sums[label] += position;
            if position < top_n {
                votes[label] += 1;
            }
        }
    }
    Ok((votes, rank_sums))
}

/// Pairwise Jaccard statistics over the rows' top-`top_n` label sets.
#[derive(Debug, Clone)]
pub struct JaccardStats {
    pub mean: f64,
    /// One value per row pair, in `(0,1), (0,2), ..., (k-2,k-1)` order.
    pub pairs: Vec<f64>,
}

/// Jaccard coefficient of two sorted index sets.
fn jaccard_sorted(a: &[usize], b: &[usize]) -> f64 {
    let mut i = 0;
    let mut j = 0;
    let mut intersection = 0usize;
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                intersection += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - intersection;
    if union == 0 {
        return 0.0;
    }
    intersection as f64 / union as f64
}

/// Computes the Jaccard coefficient for every pair of row classifiers'
/// top-`top_n` sets. Needs at least two rows.
pub fn committee_jaccard(
    transform: &TransformMatrix,
    table: &LabelEmbeddingTable,
    top_n: usize,
) -> Result<JaccardStats> {
    let k = transform.transform_dim();
    if k < 2 {
        return Err(Error::config(
            "committee Jaccard needs at least 2 transform rows",
        ));
    }
    if top_n == 0 || top_n > table.len() {
        return Err(Error::IndexOutOfRange {
            what: "top_n",
            index: top_n,
            len: table.len(),
        });
    }
    let mut top_sets = Vec::with_capacity(k);
    for r in 0..k {
        let ranking = row_classifier_ranking(transform, table, r)?;
        let mut set = predict_topk(&ranking, top_n)?;
        set.sort_unstable();
        top_sets.push(set);
    }
    let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            pairs.push(jaccard_sorted(&top_sets[i], &top_sets[j]));
        }
    }
    let mean = pairs.iter().sum::<f64>() / pairs.len() as f64;
    Ok(JaccardStats { mean, pairs })
}

/// Full committee view of one transformation.
#[derive(Debug, Clone)]
pub struct CommitteeResult {
    /// Top-`top_n` labels of each row, in rank order.
    pub row_top_sets: Vec<Vec<usize>>,
    /// Votes received per label; at most the number of rows.
    pub votes: Vec<usize>,
    /// Aggregated top-`k_pred` prediction.
    pub prediction: Vec<usize>,
    /// Mean pairwise Jaccard of the row top sets; `None` for a single row.
    pub mean_jaccard: Option<f64>,
}

pub fn committee_analysis(
    transform: &TransformMatrix,
    table: &LabelEmbeddingTable,
    top_n: usize,
    k_pred: usize,
) -> Result<CommitteeResult> {
    let k = transform.transform_dim();
    let mut row_top_sets = Vec::with_capacity(k);
    for r in 0..k {
        let ranking = row_classifier_ranking(transform, table, r)?;
        row_top_sets.push(predict_topk(&ranking, top_n)?);
    }
    let (votes, _) = tally(transform, table, top_n)?;
    let prediction = committee_vote(transform, table, top_n, k_pred)?;
    let mean_jaccard = if k >= 2 {
        Some(committee_jaccard(transform, table, top_n)?.mean)
    } else {
        None
    };
    Ok(CommitteeResult {
        row_top_sets,
        votes,
        prediction,
        mean_jaccard,
    })
}

/// Evaluates the committee-vote predictor over a test set.
pub fn evaluate_voting(
    params: &ModelParams,
    test: &Dataset,
    table: &LabelEmbeddingTable,
    top_n: usize,
    k_pred: usize,
    parallel: bool,
) -> Result<MetricsReport> {
    if test.is_empty() {
        return Err(Error::EmptyInput("test dataset"));
    }
    let predictions: Vec<Result<Vec<usize>>> =
        par::map_ordered(&test.instances, parallel, |instance| {
            let transform = params.forward_transform(&instance.features)?;
            committee_vote(&transform, table, top_n, k_pred)
        });
    let predictions: Vec<Vec<usize>> = predictions.into_iter().collect::<Result<_>>()?;
    metrics_from_predictions(&predictions, test, table)
}

/// Per-image mean pairwise Jaccard over a test set, with summary statistics.
#[derive(Debug, Clone)]
pub struct JaccardSummary {
    /// One mean per test instance, in dataset order.
    pub per_image: Vec<f64>,
    pub mean: f64,
    pub std_dev: f64,
}

pub fn test_set_jaccard(
    params: &ModelParams,
    test: &Dataset,
    table: &LabelEmbeddingTable,
    top_n: usize,
    parallel: bool,
) -> Result<JaccardSummary> {
    if test.is_empty() {
        return Err(Error::EmptyInput("test dataset"));
    }
    let per_image: Vec<Result<f64>> = par::map_ordered(&test.instances, parallel, |instance| {
        let transform = params.forward_transform(&instance.features)?;
        Ok(committee_jaccard(&transform, table, top_n)?.mean)
    });
    let per_image: Vec<f64> = per_image.into_iter().collect::<Result<_>>()?;
    let n = per_image.len() as f64;
    let mean = per_image.iter().sum::<f64>() / n;
    let variance = per_image.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(JaccardSummary {
        per_image,
        mean,
        std_dev: variance.sqrt(),
    })
}

/// Histogram of per-image Jaccard means: 20 uniform bins over [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct JaccardHistogram {
    pub counts: [u64; 20],
}

impl JaccardHistogram {
    pub fn from_values(values: &[f64]) -> Self {
        let mut counts = [0u64; 20];
        for &v in values {
            let bin = ((v * 20.0).floor() as usize).min(19);
            counts[bin] += 1;
        }
        JaccardHistogram { counts }
    }

    pub fn bin_center(i: usize) -> f64 {
        (i as f64 + 0.5) / 20.0
    }

    /// Two-column text: `bin_center count`, one line per bin.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, &count) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{:.3} {}", Self::bin_center(i), count);
        }
        out
    }
}

/// Shared settings for the transform-dimension sweep.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub k_values: Vec<usize>,
    pub hidden_dims: Vec<usize>,
    pub init_scale: f64,
    pub loss: LossConfig,
    pub opt: OptConfig,
    pub epochs: usize,
    pub lr_decay: f64,
    pub k_pred: usize,
    pub train_fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub transform_dim: usize,
    pub metrics: MetricsReport,
}

/// Trains one model per transform dimension under identical budgets on a
/// shared split, and evaluates each at `k_pred`.
///
/// Runs are sequential; per-run seeds derive deterministically from the
/// master seed, so the whole sweep is reproducible.
pub fn sweep_k(
    dataset: &Dataset,
    table: &LabelEmbeddingTable,
    config: &SweepConfig,
) -> Result<Vec<SweepRow>> {
    if config.k_values.is_empty() {
        return Err(Error::EmptyInput("k_values"));
    }
    let (train_set, test_set) = split(
        dataset,
        config.train_fraction,
        derive_seed(config.seed, "sweep-split"),
    )?;
    let mut rows = Vec::with_capacity(config.k_values.len());
    for &k in &config.k_values {
        let model_config = ModelConfig {
            feature_dim: dataset.feature_dim,
            hidden_dims: config.hidden_dims.clone(),
            transform_dim: k,
            word_dim: table.dim(),
            init_scale: config.init_scale,
        };
        let train_config = TrainConfig {
            epochs: config.epochs,
            seed: derive_seed(config.seed, &format!("sweep-k{k}")),
            lr_decay: config.lr_decay,
        };
        let (params, _) = train(
            &train_set,
            table,
            &model_config,
            &config.loss,
            &config.opt,
            &train_config,
        )?;
        let metrics = evaluate_with(
            &params,
            &test_set,
            table,
            config.k_pred,
            cfg!(feature = "parallel"),
        )?;
        rows.push(SweepRow {
            transform_dim: k,
            metrics,
        });
    }
    Ok(rows)
}

/// CSV for sweep results: one row per transform dimension.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("k,c_p,c_r,c_f1,o_p,o_r,o_f1\n");
    for row in rows {
        let m = &row.metrics;
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            row.transform_dim,
            m.per_class_precision,
            m.per_class_recall,
            m.per_class_f1,
            m.overall_precision,
            m.overall_recall,
            m.overall_f1
        );
    }
    out
}
