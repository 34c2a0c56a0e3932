//! Acceptance suite: one test per criterion, run at the stated tolerances.
//!
//! Run with `cargo test -p labelspace-cli --test acceptance -- --nocapture`
//! to see one `[PASS]` line per criterion.

use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::Rng;

use labelspace::analysis::{committee_vote, evaluate_voting, row_classifier_ranking, sweep_k, SweepConfig};
use labelspace::dataset::{generate_synthetic, split, Dataset, Instance, SyntheticSpec};
use labelspace::embeddings::{random_embeddings, LabelEmbeddingTable};
use labelspace::eval::{
    evaluate, f1_score, metrics_from_predictions, predict_topk, rank_with_transform, MetricsReport,
};
use labelspace::linalg::{dot, l2_norm, Matrix};
use labelspace::model::{ModelConfig, ModelParams, TransformMatrix};
use labelspace::rng::stream;
use labelspace::training::{
    hinge_rank_loss, loss_gradient_wrt_transform, run_grad_check, train, GradCheckConfig,
    LossConfig, OptConfig, TrainConfig, TrainReport,
};

// ---------------------------------------------------------------------------
// Shared synthetic-learnability fixture (criteria 5, 7)
// ---------------------------------------------------------------------------

struct Fixture {
    table: LabelEmbeddingTable,
    full: Dataset,
    test_set: Dataset,
    params: ModelParams,
    report: TrainReport,
    build_time: Duration,
}

fn fixture() -> &'static Fixture {
    static FIXTURE: OnceLock<Fixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let started = Instant::now();
        let spec = SyntheticSpec {
            num_labels: 50,
            word_dim: 20,
            feature_dim: 16,
            planted_rows: 2,
            num_instances: 2600,
            positives_per_instance: 2,
            noise_std: 0.0,
            seed: 11,
        };
        let (full, table, _) = generate_synthetic(&spec).expect("synthetic dataset");
        let (train_set, test_set) = split(&full, 10.0 / 13.0, 13).expect("split");
        assert_eq!(train_set.len(), 2000, "train split");
        assert_eq!(test_set.len(), 600, "test split");

        let model_config = ModelConfig::desk(16, 20);
        let (params, report) = train(
            &train_set,
            &table,
            &model_config,
            &LossConfig::default(),
            &OptConfig::default(),
            &TrainConfig::new(50, 7),
        )
        .expect("training");
        Fixture {
            table,
            full,
            test_set,
            params,
            report,
            build_time: started.elapsed(),
        }
    })
}

fn random_transform(rng: &mut labelspace::rng::SeededRng, k: usize, d: usize) -> TransformMatrix {
    TransformMatrix::from_matrix(Matrix::from_vec(
        k,
        d,
        (0..k * d).map(|_| rng.gen_range(-2.0..2.0)).collect(),
    ))
}

fn random_vec(rng: &mut labelspace::rng::SeededRng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

/// Random orthogonal matrix via Gram-Schmidt on a seeded Gaussian draw.
fn random_orthogonal(rng: &mut labelspace::rng::SeededRng, n: usize) -> Matrix {
    loop {
        let mut rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let mut ok = true;
        for i in 0..n {
            for j in 0..i {
                let proj = dot(&rows[i], &rows[j]);
                let prev = rows[j].clone();
                for (x, p) in rows[i].iter_mut().zip(&prev) {
                    *x -= proj * p;
                }
            }
            let norm = l2_norm(&rows[i]);
            if norm < 1e-6 {
                ok = false;
                break;
            }
            for x in &mut rows[i] {
                *x /= norm;
            }
        }
        if ok {
            return Matrix::from_rows(&rows);
        }
    }
}

fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut sum = 0.0;
            for t in 0..a.cols() {
                sum += a.get(i, t) * b.get(t, j);
            }
            out.set(i, j, sum);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_gradient_correctness() {
    let started = Instant::now();
    let summary = run_grad_check(&GradCheckConfig {
        trials: 100,
        step: 1e-5,
        seed: 0,
    })
    .expect("grad check");
    let elapsed = started.elapsed();
    assert!(
        summary.worst_rel_error <= 1e-4,
        "worst relative error {} exceeds 1e-4",
        summary.worst_rel_error
    );
    assert!(summary.checked > 10_000, "only {} coordinates checked", summary.checked);
    assert!(
        elapsed <= Duration::from_secs(60),
        "grad check took {elapsed:?}"
    );

    // The CLI gate reports the same verdict through its exit code.
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_labelspace"))
        .current_dir(dir.path())
        .args(["grad-check", "--trials", "100", "--seed", "0"])
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    println!(
        "[PASS] criterion 1: gradient correctness — worst rel error {:.3e} over {} coords in {:.1}s",
        summary.worst_rel_error,
        summary.checked,
        elapsed.as_secs_f64()
    );
}

// ---------------------------------------------------------------------------
// 2. Loss contract
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_loss_contract() {
    let mut rng = stream(2024, "acceptance-loss");
    let cases = 1000;
    for case in 0..cases {
        let k = rng.gen_range(1..4);
        let d = rng.gen_range(1..6);
        let transform = random_transform(&mut rng, k, d);
        let margin = rng.gen_range(0.1..2.0);
        let positives: Vec<Vec<f64>> = (0..rng.gen_range(1..4usize))
            .map(|_| random_vec(&mut rng, d))
            .collect();
        let negatives: Vec<Vec<f64>> = (0..rng.gen_range(1..6usize))
            .map(|_| random_vec(&mut rng, d))
            .collect();
        let pos_refs: Vec<&[f64]> = positives.iter().map(Vec::as_slice).collect();
        let neg_refs: Vec<&[f64]> = negatives.iter().map(Vec::as_slice).collect();

        let (loss, active) = hinge_rank_loss(&transform, &pos_refs, &neg_refs, margin).unwrap();
        assert!(loss >= 0.0, "case {case}: negative loss {loss}");

        // Zero exactly when every negative clears the average positive norm
        // by the margin.
        let avg: f64 = pos_refs
            .iter()
            .map(|p| transform.label_distance(p).unwrap())
            .sum::<f64>()
            / pos_refs.len() as f64;
        let all_cleared = neg_refs
            .iter()
            .all(|n| transform.label_distance(n).unwrap() >= avg + margin);
        assert_eq!(loss == 0.0, all_cleared, "case {case}");

        // Flags flag exactly the violating negatives.
        for (j, n) in neg_refs.iter().enumerate() {
            let term = margin + avg - transform.label_distance(n).unwrap();
            assert_eq!(active[j], term > 0.0, "case {case} negative {j}");
        }

        // Zero gradient on the inactive region.
        if loss == 0.0 {
            let grad =
                loss_gradient_wrt_transform(&transform, &pos_refs, &neg_refs, margin, 1e-8)
                    .unwrap();
            assert!(grad.iter().all(|&g| g == 0.0), "case {case}: nonzero gradient");
        }

        // Additivity over negatives: a duplicated negative adds exactly its
        // own hinge term.
        let j = rng.gen_range(0..neg_refs.len());
        let term = (margin + avg - transform.label_distance(neg_refs[j]).unwrap()).max(0.0);
        let mut extended = neg_refs.clone();
        extended.push(neg_refs[j]);
        let (loss_dup, _) = hinge_rank_loss(&transform, &pos_refs, &extended, margin).unwrap();
        assert_eq!(loss_dup, loss + term, "case {case}: additivity");
    }
    println!("[PASS] criterion 2: loss contract — {cases} randomized cases, exact logical checks");
}

// ---------------------------------------------------------------------------
// 3. Metric oracle equivalence
// ---------------------------------------------------------------------------

/// Independent brute-force metric reference: per-class counts recomputed by
/// scanning instances per class, overall counts by nested loops.
fn brute_force_metrics(
    predictions: &[Vec<usize>],
    truths: &[Vec<usize>],
    vocab: usize,
) -> (f64, f64, f64, f64, f64, f64) {
    let mut total_correct = 0usize;
    let mut total_predicted = 0usize;
    let mut total_true = 0usize;
    for (pred, truth) in predictions.iter().zip(truths) {
        total_predicted += pred.len();
        total_true += truth.len();
        for p in pred {
            if truth.contains(p) {
                total_correct += 1;
            }
        }
    }
    let o_p = total_correct as f64 / total_predicted as f64;
    let o_r = total_correct as f64 / total_true as f64;

    let mut precision_sum = 0.0;
    let mut precision_count = 0usize;
    let mut recall_sum = 0.0;
    let mut recall_count = 0usize;
    for class in 0..vocab {
        let mut predicted = 0usize;
        let mut actual = 0usize;
        let mut correct = 0usize;
        for (pred, truth) in predictions.iter().zip(truths) {
            let was_predicted = pred.contains(&class);
            let was_true = truth.contains(&class);
            if was_predicted {
                predicted += 1;
            }
            if was_true {
                actual += 1;
            }
            if was_predicted && was_true {
                correct += 1;
            }
        }
        if predicted > 0 {
            precision_sum += correct as f64 / predicted as f64;
            precision_count += 1;
        }
        if actual > 0 {
            recall_sum += correct as f64 / actual as f64;
            recall_count += 1;
        }
    }
    let c_p = if precision_count > 0 {
        precision_sum / precision_count as f64
    } else {
        0.0
    };
    let c_r = if recall_count > 0 {
        recall_sum / recall_count as f64
    } else {
        0.0
    };
    let harmonic = |p: f64, r: f64| if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (c_p, c_r, harmonic(c_p, c_r), o_p, o_r, harmonic(o_p, o_r))
}

#[test]
fn criterion_03_metric_oracle_equivalence() {
    let mut rng = stream(3030, "acceptance-metrics");
    let configs = 1000;
    for case in 0..configs {
        let vocab = rng.gen_range(2..12);
        let images = rng.gen_range(1..15);
        let table = random_embeddings(vocab, 3, case as u64).unwrap();
        let truths: Vec<Vec<usize>> = (0..images)
            .map(|_| {
                let count = rng.gen_range(1..=vocab.min(4));
                let mut v: Vec<usize> = (0..count).map(|_| rng.gen_range(0..vocab)).collect();
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect();
        let predictions: Vec<Vec<usize>> = (0..images)
            .map(|_| {
                let count = rng.gen_range(1..=vocab);
                let mut all: Vec<usize> = (0..vocab).collect();
                for i in (1..all.len()).rev() {
                    let j = rng.gen_range(0..=i);
                    all.swap(i, j);
                }
                all.truncate(count);
                all
            })
            .collect();

        let dataset = Dataset {
            instances: truths
                .iter()
                .enumerate()
                .map(|(i, t)| Instance::new(format!("i{i}"), vec![0.0], t.clone()))
                .collect(),
            feature_dim: 1,
            vocab_size: vocab,
        };
        let report: MetricsReport =
            metrics_from_predictions(&predictions, &dataset, &table).unwrap();
        let (c_p, c_r, c_f1, o_p, o_r, o_f1) = brute_force_metrics(&predictions, &truths, vocab);

        assert_eq!(report.per_class_precision, c_p, "case {case}: C-P");
        assert_eq!(report.per_class_recall, c_r, "case {case}: C-R");
        assert_eq!(report.per_class_f1, c_f1, "case {case}: C-F1");
        assert_eq!(report.overall_precision, o_p, "case {case}: O-P");
        assert_eq!(report.overall_recall, o_r, "case {case}: O-R");
        assert_eq!(report.overall_f1, o_f1, "case {case}: O-F1");
    }
    println!(
        "[PASS] criterion 3: metric oracle equivalence — {configs} configurations, exact equality"
    );
}

// ---------------------------------------------------------------------------
// 4. F1 combiner against the published O-P/O-R pair
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_f1_combiner() {
    let f1 = f1_score(0.518, 0.638);
    assert!(
        (f1 - 0.572).abs() <= 0.0005,
        "harmonic composition gives {f1}, expected 0.572 +- 0.0005"
    );
    println!(
        "[PASS] criterion 4: F1 combiner — f1(51.8%, 63.8%) = {:.2}% within 0.05 of 57.2%",
        f1 * 100.0
    );
}

// ---------------------------------------------------------------------------
// 5. Synthetic learnability
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_synthetic_learnability() {
    let fx = fixture();
    assert!(
        fx.build_time <= Duration::from_secs(600),
        "dataset + training took {:?}",
        fx.build_time
    );

    let metrics = evaluate(&fx.params, &fx.test_set, &fx.table, 3).expect("evaluation");
    assert!(
        metrics.overall_recall >= 0.90,
        "O-R@3 = {:.4} below 0.90",
        metrics.overall_recall
    );

    let first = fx.report.epochs.first().expect("epoch stats").mean_loss;
    let last = fx.report.epochs.last().expect("epoch stats").mean_loss;
    assert!(
        last < 0.10 * first,
        "final mean loss {last:.4} not below 10% of first epoch {first:.4}"
    );

    println!(
        "[PASS] criterion 5: synthetic learnability — O-R@3 = {:.4}, loss {:.2} -> {:.4} ({:.1}%), {:.1}s",
        metrics.overall_recall,
        first,
        last,
        100.0 * last / first,
        fx.build_time.as_secs_f64()
    );
}

// ---------------------------------------------------------------------------
// 6. Committee decomposition
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_committee_decomposition() {
    let mut rng = stream(6, "acceptance-decomp");
    for case in 0..1000 {
        let k = rng.gen_range(1..8);
        let d = rng.gen_range(1..10);
        let transform = random_transform(&mut rng, k, d);
        let w = random_vec(&mut rng, d);
        let full = transform.label_distance(&w).unwrap();
        let sum_rows: f64 = (0..k)
            .map(|r| {
                let p = dot(transform.row(r).unwrap(), &w);
                p * p
            })
            .sum();
        assert!(
            (full * full - sum_rows).abs() <= 1e-12 * (full * full).max(1.0),
            "case {case}: {} vs {}",
            full * full,
            sum_rows
        );
    }

    // Single-row committee: voting equals full-distance prediction exactly.
    for case in 0..200u64 {
        let mut rng = stream(case, "acceptance-k1");
        let vocab = rng.gen_range(3..15);
        let d = rng.gen_range(2..8);
        let table = random_embeddings(vocab, d, case).unwrap();
        let transform = random_transform(&mut rng, 1, d);
        let full = rank_with_transform(&transform, &table).unwrap();
        let k_pred = rng.gen_range(1..=vocab);
        for top_n in [k_pred, vocab] {
            let vote = committee_vote(&transform, &table, top_n, k_pred).unwrap();
            let direct = predict_topk(&full, k_pred).unwrap();
            assert_eq!(vote, direct, "case {case}: top_n {top_n} k_pred {k_pred}");
        }
        let row = row_classifier_ranking(&transform, &table, 0).unwrap();
        let row_order: Vec<usize> = row.entries().iter().map(|&(i, _)| i).collect();
        let full_order: Vec<usize> = full.entries().iter().map(|&(i, _)| i).collect();
        assert_eq!(row_order, full_order, "case {case}");
    }

    println!("[PASS] criterion 6: committee decomposition exact to 1e-12; k=1 voting = top-k prediction");
}

// ---------------------------------------------------------------------------
// 7. Committee trend
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_committee_trend() {
    let fx = fixture();
    let k_pred = 3;
    let mut o_p_by_n = Vec::new();
    for n in [1, 3, 5] {
        let report = evaluate_voting(&fx.params, &fx.test_set, &fx.table, n, k_pred, true)
            .expect("voting evaluation");
        o_p_by_n.push(report.overall_precision);
    }
    let full = evaluate(&fx.params, &fx.test_set, &fx.table, k_pred).expect("full evaluation");

    assert!(
        o_p_by_n[0] <= o_p_by_n[1] && o_p_by_n[1] <= o_p_by_n[2]
            && o_p_by_n[2] <= full.overall_precision,
        "O-P ordering violated: vote1 {:.4}, vote3 {:.4}, vote5 {:.4}, full {:.4}",
        o_p_by_n[0],
        o_p_by_n[1],
        o_p_by_n[2],
        full.overall_precision
    );
    println!(
        "[PASS] criterion 7: committee trend — O-P {:.4} <= {:.4} <= {:.4} <= {:.4} (vote1/3/5/full)",
        o_p_by_n[0], o_p_by_n[1], o_p_by_n[2], full.overall_precision
    );
}

// ---------------------------------------------------------------------------
// 8. Stability across the transform dimension
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_k_stability() {
    let fx = fixture();
    let config = SweepConfig {
        k_values: vec![2, 4, 8, 16],
        hidden_dims: vec![],
        init_scale: 1.0,
        loss: LossConfig::default(),
        opt: OptConfig::default(),
        epochs: 50,
        lr_decay: 1.0,
        k_pred: 5,
        train_fraction: 10.0 / 13.0,
        seed: 11,
    };
    let rows = sweep_k(&fx.full, &fx.table, &config).expect("sweep");
    let f1s: Vec<f64> = rows.iter().map(|r| r.metrics.overall_f1).collect();
    let max = f1s.iter().cloned().fold(f64::MIN, f64::max);
    let min = f1s.iter().cloned().fold(f64::MAX, f64::min);
    let spread = max - min;
    assert!(
        spread <= 0.05,
        "O-F1 spread {:.4} exceeds 5 points; values {:?}",
        spread,
        f1s
    );
    println!(
        "[PASS] criterion 8: k-stability — O-F1 over k=2,4,8,16: {:?}, spread {:.2} points",
        f1s.iter().map(|v| (v * 1000.0).round() / 10.0).collect::<Vec<_>>(),
        spread * 100.0
    );
}

// ---------------------------------------------------------------------------
// 9. Invariance suite
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_invariance_suite() {
    let draws = 200;

    // Left-orthogonal invariance of distances and rankings.
    let mut rng = stream(91, "acceptance-left");
    for case in 0..draws {
        let k = rng.gen_range(1..6);
        let d = rng.gen_range(2..8);
        let vocab = rng.gen_range(3..12);
        let table = random_embeddings(vocab, d, case).unwrap();
        let a = Matrix::from_vec(k, d, (0..k * d).map(|_| rng.gen_range(-2.0..2.0)).collect());
        let q = random_orthogonal(&mut rng, k);
        let qa = matmul(&q, &a);
        let ta = TransformMatrix::from_matrix(a);
        let tqa = TransformMatrix::from_matrix(qa);
        for i in 0..table.len() {
            let w = table.vector(i).unwrap();
            let lhs = tqa.label_distance(w).unwrap();
            let rhs = ta.label_distance(w).unwrap();
            assert!(
                (lhs - rhs).abs() <= 1e-9 * rhs.max(1.0),
                "case {case}: distance {lhs} vs {rhs}"
            );
        }
        let order = |t: &TransformMatrix| -> Vec<usize> {
            rank_with_transform(t, &table)
                .unwrap()
                .entries()
                .iter()
                .map(|&(i, _)| i)
                .collect()
        };
        assert_eq!(order(&ta), order(&tqa), "case {case}: ranking changed");
    }

    // Absolute homogeneity.
    let mut rng = stream(92, "acceptance-homog");
    for case in 0..draws {
        let k = rng.gen_range(1..6);
        let d = rng.gen_range(1..8);
        let transform = random_transform(&mut rng, k, d);
        let w = random_vec(&mut rng, d);
        let c: f64 = rng.gen_range(-5.0..5.0);
        let scaled: Vec<f64> = w.iter().map(|x| c * x).collect();
        let lhs = transform.label_distance(&scaled).unwrap();
        let rhs = c.abs() * transform.label_distance(&w).unwrap();
        assert!(
            (lhs - rhs).abs() <= 1e-9 * rhs.max(1.0),
            "case {case}: {lhs} vs {rhs}"
        );
    }

    // Right-rotation compatibility.
    let mut rng = stream(93, "acceptance-right");
    for case in 0..draws {
        let k = rng.gen_range(1..6);
        let d = rng.gen_range(2..8);
        let a = Matrix::from_vec(k, d, (0..k * d).map(|_| rng.gen_range(-2.0..2.0)).collect());
        let w = random_vec(&mut rng, d);
        let q = random_orthogonal(&mut rng, d);
        let mut qt = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                qt.set(i, j, q.get(j, i));
            }
        }
        let lhs = TransformMatrix::from_matrix(matmul(&a, &qt))
            .label_distance(&q.matvec(&w))
            .unwrap();
        let rhs = TransformMatrix::from_matrix(a).label_distance(&w).unwrap();
        assert!(
            (lhs - rhs).abs() <= 1e-9 * rhs.max(1.0),
            "case {case}: {lhs} vs {rhs}"
        );
    }

    println!("[PASS] criterion 9: invariance suite — {draws} draws each at 1e-9");
}

// ---------------------------------------------------------------------------
// 10. End-to-end determinism through the CLI
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_cli_determinism() {
    let run_pipeline = |dir: &std::path::Path| -> Vec<Vec<u8>> {
        let run = |args: &[&str]| {
            let out = Command::new(env!("CARGO_BIN_EXE_labelspace"))
                .current_dir(dir)
                .args(args)
                .output()
                .expect("binary runs");
            assert!(
                out.status.success(),
                "{:?}: {}",
                args,
                String::from_utf8_lossy(&out.stderr)
            );
        };
        run(&[
            "gen-synthetic",
            "--labels",
            "20",
            "--dim",
            "8",
            "--feature-dim",
            "6",
            "--instances",
            "300",
            "--positives",
            "2",
            "--seed",
            "11",
            "--out-dir",
            "data",
        ]);
        run(&[
            "train",
            "--dataset",
            "data/dataset.txt",
            "--embeddings",
            "data/embeddings.txt",
            "--epochs",
            "5",
            "--seed",
            "5",
            "--negatives",
            "10",
            "--checkpoint",
            "model.ckpt",
            "--report",
            "report.csv",
        ]);
        run(&[
            "predict",
            "--checkpoint",
            "model.ckpt",
            "--embeddings",
            "data/embeddings.txt",
            "--features",
            "data/dataset.txt",
            "--topk",
            "3",
            "--output",
            "predictions.txt",
        ]);
        run(&[
            "evaluate",
            "--checkpoint",
            "model.ckpt",
            "--dataset",
            "data/dataset.txt",
            "--embeddings",
            "data/embeddings.txt",
            "--topk",
            "3",
            "--output",
            "metrics.csv",
        ]);
        [
            "data/dataset.txt",
            "data/embeddings.txt",
            "data/planted.txt",
            "model.ckpt",
            "predictions.txt",
            "metrics.csv",
        ]
        .iter()
        .map(|name| std::fs::read(dir.join(name)).expect("output exists"))
        .collect()
    };

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let outputs_a = run_pipeline(dir_a.path());
    let outputs_b = run_pipeline(dir_b.path());
    for (i, (a, b)) in outputs_a.iter().zip(&outputs_b).enumerate() {
        assert_eq!(a, b, "artifact {i} differs between identical runs");
    }
    println!(
        "[PASS] criterion 10: determinism — checkpoint, prediction dump, and metric CSV byte-identical across reruns"
    );
}
