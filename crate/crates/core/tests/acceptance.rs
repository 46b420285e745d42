//! Acceptance criteria. Each test prints one PASS/FAIL line; run with
//! `cargo test -p wcs-core --test acceptance -- --nocapture --test-threads=1`
//! to see them.

mod common;

use std::time::{Duration, Instant};

use common::*;
use nalgebra::DVector;
use rand::Rng;
use wcs_core::classifiers::{
    predict, predict_knn, train_knn, train_pca_pipeline, train_whitened_cosine, Classifier,
    ComponentSelection, Metric, PcaHead,
};
use wcs_core::dataset::{generate_synthetic_with_holdout, split, DatasetManifest, ManifestEntry, SyntheticSpec};
use wcs_core::evaluation::{evaluate, metrics, ConfusionMatrix};
use wcs_core::linalg::{center_columns, column_mean, pca_gram_trick, whitening_matrix};
use wcs_core::persist::{self, ModelFile};
use wcs_core::similarity::whitened_cosine;
use wcs_core::{Label, Matrix, TruncationPolicy};

fn report(id: u32, what: &str, passed: bool, detail: String) {
    println!(
        "[{}] AC-{id:02} {what}: {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "AC-{id:02} {what}: {detail}");
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

#[test]
fn ac01_metric_arithmetic_reproduces_confusion_table() {
    let r = metrics(&ConfusionMatrix::new(48, 150, 0, 2), "Our Method").unwrap();
    let (acc, rec, prec, f1) = (r.accuracy, r.recall.unwrap(), r.precision.unwrap(), r.f1.unwrap());
    let passed = round2(acc) == 0.99
        && round2(rec) == 0.96
        && round2(prec) == 1.00
        && round2(f1) == 0.98
        && (f1 - 0.97959).abs() < 1e-5;
    report(
        1,
        "metrics on tp=48 tn=150 fp=0 fn=2",
        passed,
        format!("acc {acc:.4} recall {rec:.4} precision {prec:.4} f1 {f1:.5}"),
    );
}

#[test]
fn ac02_gram_route_matches_direct_eigendecomposition() {
    let start = Instant::now();
    let mut r = rng(2002);
    let policy = TruncationPolicy::default();
    let (mut worst_value, mut worst_vector, mut compared) = (0.0_f64, 0.0_f64, 0usize);
    let trials = 120;
    for _ in 0..trials {
        let d = r.gen_range(1..=64);
        let c = r.gen_range(2..=16);
        let x = gaussian(&mut r, d, c);
        let xc = center_columns(&x, &column_mean(&x).unwrap()).unwrap();
        let gram = pca_gram_trick(&xc, &policy).unwrap();
        let direct = sorted_eigen(&covariance(&to_na(&x)).1);
        let lmax = direct[0].0;
        let nonzero = direct.iter().filter(|(l, _)| *l > policy.threshold(lmax)).count();
        assert_eq!(nonzero, gram.len(), "retained rank differs (d={d}, c={c})");
        for i in 0..gram.len() {
            let l = direct[i].0;
            worst_value = worst_value.max((gram.values[i] - l).abs() / l);
            let prev = if i == 0 { f64::INFINITY } else { direct[i - 1].0 - l };
            let next = direct.get(i + 1).map_or(f64::INFINITY, |n| l - n.0);
            // eigenvectors are only determined for separated eigenvalues
            if prev.min(next) < 1e-3 * lmax {
                continue;
            }
            let u = DVector::from_column_slice(gram.vector(i));
            let s = u.dot(&direct[i].1).signum();
            worst_vector = worst_vector.max((u - s * &direct[i].1).amax());
            compared += 1;
        }
    }
    let elapsed = start.elapsed();
    report(
        2,
        "Gram-matrix PCA vs direct covariance eigendecomposition",
        worst_value <= 1e-8 && worst_vector <= 1e-6 && elapsed < Duration::from_secs(10),
        format!(
            "{trials} matrices, max rel eigenvalue err {worst_value:.2e} (tol 1e-8), \
             max eigenvector err {worst_vector:.2e} over {compared} vectors (tol 1e-6), {elapsed:.2?}"
        ),
    );
}

#[test]
fn ac03_whitening_identity() {
    let mut r = rng(3003);
    let policy = TruncationPolicy::default();
    let mut worst: f64 = 0.0;
    let trials = 25;
    for _ in 0..trials {
        let d = r.gen_range(3..=64);
        let c = r.gen_range(3..=32);
        let x = gaussian(&mut r, d, c);
        let (_, sigma) = covariance(&to_na(&x));
        let xc = center_columns(&x, &column_mean(&x).unwrap()).unwrap();
        let w = whitening_matrix(&pca_gram_trick(&xc, &policy).unwrap(), &policy).unwrap();
        let w = to_na(w.matrix());
        let k = w.ncols();
        let dev = (w.transpose() * &sigma * &w - nalgebra::DMatrix::<f64>::identity(k, k)).amax();
        worst = worst.max(dev);
    }
    report(
        3,
        "whitening identity W^t Sigma W = I",
        worst <= 1e-6,
        format!("{trials} training sets, max |W^t Sigma W - I| {worst:.2e} (tol 1e-6)"),
    );
}

#[test]
fn ac04_projected_form_matches_inverse_covariance_form() {
    let mut r = rng(4004);
    let policy = TruncationPolicy::default();
    let mut worst: f64 = 0.0;
    let trials = 30;
    for _ in 0..trials {
        let d = r.gen_range(1..=20);
        let c = d + r.gen_range(2..=20);
        let x = gaussian(&mut r, d, c);
        let (_, sigma) = covariance(&to_na(&x));
        let xc = center_columns(&x, &column_mean(&x).unwrap()).unwrap();
        let w = whitening_matrix(&pca_gram_trick(&xc, &policy).unwrap(), &policy).unwrap();
        assert_eq!(w.retained_rank(), d);
        let w_na = to_na(w.matrix());
        for _ in 0..5 {
            let u = gaussian(&mut r, d, 1);
            let v = gaussian(&mut r, d, 1);
            let ours = whitened_cosine(u.as_slice(), v.as_slice(), &w).unwrap();
            let oracle = inverse_form(
                &sigma,
                &w_na,
                &DVector::from_column_slice(u.as_slice()),
                &DVector::from_column_slice(v.as_slice()),
            );
            worst = worst.max((ours - oracle).abs());
        }
    }
    report(
        4,
        "whitened cosine equals u^t Sigma^-1 v form",
        worst <= 1e-6,
        format!("{trials} full-rank instances x 5 pairs, max diff {worst:.2e} (tol 1e-6)"),
    );
}

#[test]
fn ac05_detector_matches_brute_force() {
    let mut r = rng(5005);
    let policy = TruncationPolicy::default();
    let instances = 60;
    let (mut queries, mut mismatches) = (0usize, 0usize);
    for _ in 0..instances {
        let d = r.gen_range(2..=10);
        let c = r.gen_range(3..=8);
        let n = r.gen_range(1..c);
        let xn = gaussian(&mut r, d, n);
        let xr = gaussian(&mut r, d, c - n);
        let model = train_whitened_cosine(&xn, &xr, &policy).unwrap();
        let oracle = BruteForceDetector::train(&xn, &xr);
        for _ in 0..6 {
            let q = gaussian(&mut r, d, 1);
            queries += 1;
            if predict(&model, q.as_slice()).unwrap().label != oracle.classify(q.as_slice()) {
                mismatches += 1;
            }
        }
    }
    report(
        5,
        "train+predict vs literal brute-force implementation",
        mismatches == 0,
        format!("{instances} instances, {queries} queries, {mismatches} label mismatches"),
    );
}

#[test]
fn ac06_query_scale_invariance() {
    let mut r = rng(6006);
    let spec = SyntheticSpec {
        d: 32,
        n: 12,
        m: 9,
        separation: 4.0,
        sigma: 1.0,
        seed: 6,
    };
    let (train, _) = generate_synthetic_with_holdout(&spec, 0, 0).unwrap();
    let model = train_whitened_cosine(&train.x_normal, &train.x_rosacea, &TruncationPolicy::default()).unwrap();
    let (mut worst, mut label_flips) = (0.0_f64, 0usize);
    let queries = 50;
    for _ in 0..queries {
        let q = gaussian(&mut r, 32, 1);
        let base = predict(&model, q.as_slice()).unwrap();
        for alpha in [1e-3, 1.0, 1e3] {
            let scaled: Vec<f64> = q.as_slice().iter().map(|v| v * alpha).collect();
            let p = predict(&model, &scaled).unwrap();
            worst = worst
                .max((p.sim_normal - base.sim_normal).abs())
                .max((p.sim_rosacea - base.sim_rosacea).abs());
            if p.label != base.label {
                label_flips += 1;
            }
        }
    }
    report(
        6,
        "predict(alpha x) = predict(x) for alpha in {1e-3, 1, 1e3}",
        worst <= 1e-9 && label_flips == 0,
        format!("{queries} queries, max score diff {worst:.2e} (tol 1e-9), {label_flips} label changes"),
    );
}

#[test]
fn ac07_synthetic_separable_benchmark() {
    let start = Instant::now();
    let spec = SyntheticSpec {
        d: 1024,
        n: 200,
        m: 100,
        separation: 10.0,
        sigma: 1.0,
        seed: 0,
    };
    let (train, test) = generate_synthetic_with_holdout(&spec, 100, 50).unwrap();
    let model = train_whitened_cosine(&train.x_normal, &train.x_rosacea, &TruncationPolicy::default()).unwrap();
    let wc = metrics(&evaluate(&model, &test.x_normal, &test.x_rosacea).unwrap(), "wc").unwrap();
    let x = train.x_normal.hstack(&train.x_rosacea).unwrap();
    let knn = train_knn(&x, &train.labels(), 1, Metric::L2).unwrap();
    let kn = metrics(&evaluate(&knn, &test.x_normal, &test.x_rosacea).unwrap(), "knn").unwrap();
    let elapsed = start.elapsed();
    let recall = wc.recall.unwrap_or(0.0);
    report(
        7,
        "synthetic d=1024 benchmark",
        wc.accuracy >= 0.98 && recall >= 0.96 && kn.accuracy >= 0.95 && elapsed < Duration::from_secs(60),
        format!(
            "whitened cosine acc {:.4} recall {recall:.4} (>= 0.98 / 0.96), rank {}; \
             KNN-L2 k=1 acc {:.4} (>= 0.95); {elapsed:.2?}",
            wc.accuracy,
            model.retained_rank(),
            kn.accuracy
        ),
    );
}

#[test]
fn ac08_persistence_round_trip_is_bit_identical() {
    let spec = SyntheticSpec {
        d: 48,
        n: 20,
        m: 15,
        separation: 5.0,
        sigma: 1.0,
        seed: 8,
    };
    let (train, _) = generate_synthetic_with_holdout(&spec, 0, 0).unwrap();
    let model = train_whitened_cosine(&train.x_normal, &train.x_rosacea, &TruncationPolicy::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.wcs");
    persist::save_path(&ModelFile::from(model.clone()), &path).unwrap();
    let loaded = match persist::load_path(&path).unwrap().model {
        persist::AnyModel::WhitenedCosine(m) => m,
        other => panic!("unexpected kind {}", other.kind()),
    };
    let mut r = rng(8008);
    let mut differing = 0;
    let trials = 100;
    for _ in 0..trials {
        let q = gaussian(&mut r, 48, 1);
        let a = predict(&model, q.as_slice()).unwrap();
        let b = predict(&loaded, q.as_slice()).unwrap();
        if a.label != b.label
            || a.sim_normal.to_bits() != b.sim_normal.to_bits()
            || a.sim_rosacea.to_bits() != b.sim_rosacea.to_bits()
        {
            differing += 1;
        }
    }
    report(
        8,
        "save/load round trip",
        differing == 0,
        format!("{trials} vectors, {differing} with differing label or score bits"),
    );
}

#[test]
fn ac09_split_reproduces_published_partition_sizes() {
    let mut entries = Vec::new();
    for i in 0..600 {
        entries.push(ManifestEntry {
            path: format!("normal/{i}.png").into(),
            label: Label::Normal,
        });
    }
    for i in 0..300 {
        entries.push(ManifestEntry {
            path: format!("rosacea/{i}.png").into(),
            label: Label::Rosacea,
        });
    }
    let manifest = DatasetManifest::new(entries).unwrap();
    let (train, val) = split(&manifest, 5.0 / 6.0, 2025).unwrap();
    let again = split(&manifest, 5.0 / 6.0, 2025).unwrap();
    let counts = (
        train.count(Label::Normal),
        val.count(Label::Normal),
        train.count(Label::Rosacea),
        val.count(Label::Rosacea),
    );
    report(
        9,
        "stratified split at ratio 5/6",
        counts == (500, 100, 250, 50) && again == (train, val),
        format!(
            "normal {}/{} rosacea {}/{} (expected 500/100, 250/50), deterministic",
            counts.0, counts.1, counts.2, counts.3
        ),
    );
}

#[test]
fn ac10_full_rank_pca_knn_equals_plain_knn() {
    let mut r = rng(1010);
    let policy = TruncationPolicy::default();
    let instances = 25;
    let (mut queries, mut mismatches) = (0usize, 0usize);
    for _ in 0..instances {
        let d = r.gen_range(2..=16);
        let n = r.gen_range(2..=8);
        let m = r.gen_range(2..=8);
        let xn = gaussian(&mut r, d, n);
        let xr = gaussian(&mut r, d, m);
        let x = xn.hstack(&xr).unwrap();
        let rank = pca_gram_trick(&center_columns(&x, &column_mean(&x).unwrap()).unwrap(), &policy)
            .unwrap()
            .len();
        let pipe = train_pca_pipeline(&xn, &xr, ComponentSelection::Fixed(rank), PcaHead::KnnL2 { k: 1 }, &policy)
            .unwrap();
        let mut labels = vec![Label::Normal; n];
        labels.extend(vec![Label::Rosacea; m]);
        let knn = train_knn(&x, &labels, 1, Metric::L2).unwrap();
        let probes: Matrix = gaussian(&mut r, d, 10);
        for q in probes.columns() {
            queries += 1;
            if pipe.predict(q).unwrap().label != predict_knn(&knn, q).unwrap().label {
                mismatches += 1;
            }
        }
    }
    report(
        10,
        "full-rank PCA + KNN-L2 vs plain KNN-L2",
        mismatches == 0,
        format!("{instances} instances, {queries} queries, {mismatches} label mismatches"),
    );
}
