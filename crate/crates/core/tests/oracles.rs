//! Derived-value checks against independent reference computations.

mod common;

use common::*;
use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;
use wcs_core::classifiers::{
    predict, predict_knn, train_knn, train_pca_pipeline, train_whitened_cosine, Classifier,
    ComponentSelection, Metric, PcaHead,
};
use wcs_core::dataset::{generate_synthetic_with_holdout, SyntheticSpec};
use wcs_core::evaluation::{evaluate, metrics};
use wcs_core::linalg::{
    center_columns, column_mean, covariance_unbiased, eigh_symmetric, pca_gram_trick,
    whitening_matrix,
};
use wcs_core::{Label, Matrix, TruncationPolicy};

fn cols(c: &[&[f64]]) -> Matrix {
    Matrix::from_columns(c).unwrap()
}

#[test]
fn hand_eigendecomposition_residual() {
    let a = Matrix::from_rows(&[&[1.0, -1.0], &[-1.0, 1.0]]).unwrap();
    let es = eigh_symmetric(&a).unwrap();
    let na = to_na(&a);
    for i in 0..2 {
        let v = DVector::from_column_slice(es.vector(i));
        assert!((&na * &v - es.values[i] * &v).norm() < 1e-12);
    }
    let first = es.vector(0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((first[0].abs() - h).abs() < 1e-14 && (first[1].abs() - h).abs() < 1e-14);
    assert!(first[0] * first[1] < 0.0);
}

#[test]
fn gram_route_two_point_matches_direct() {
    let x = cols(&[&[1.0, 0.0], &[-1.0, 0.0]]);
    let gram = pca_gram_trick(&x, &TruncationPolicy::default()).unwrap();
    let (_, sigma) = covariance(&to_na(&x));
    let direct = sorted_eigen(&sigma);
    assert!((gram.values[0] - direct[0].0).abs() < 1e-14);
    assert!((gram.values[0] - 2.0).abs() < 1e-14);
    assert!((gram.vector(0)[0].abs() - direct[0].1[0].abs()).abs() < 1e-14);
}

#[test]
fn gram_route_d50_c8_matches_direct() {
    let mut r = rng(50);
    let x = gaussian(&mut r, 50, 8);
    let xc = center_columns(&x, &column_mean(&x).unwrap()).unwrap();
    let gram = pca_gram_trick(&xc, &TruncationPolicy::default()).unwrap();
    let direct = sorted_eigen(&covariance(&to_na(&x)).1);
    assert_eq!(gram.len(), 7);
    for i in 0..7 {
        assert!((gram.values[i] - direct[i].0).abs() / direct[i].0 < 1e-8);
        let u = DVector::from_column_slice(gram.vector(i));
        let s = u.dot(&direct[i].1).signum();
        assert!((u - s * &direct[i].1).amax() < 1e-6);
    }
    // and against the crate's own dense route
    let dense = eigh_symmetric(&covariance_unbiased(&xc).unwrap()).unwrap();
    for i in 0..7 {
        assert!((gram.values[i] - dense.values[i]).abs() / dense.values[i] < 1e-8);
    }
}

fn toy() -> (Matrix, Matrix) {
    (
        cols(&[&[1.0, 0.0, 0.0], &[0.9, 0.1, 0.0]]),
        cols(&[&[0.0, 1.0, 0.0], &[0.1, 0.9, 0.0]]),
    )
}

#[test]
fn toy_detector_matches_brute_force() {
    let (xn, xr) = toy();
    let model = train_whitened_cosine(&xn, &xr, &TruncationPolicy::default()).unwrap();
    let oracle = BruteForceDetector::train(&xn, &xr);

    let q = [0.0, 1.0, 0.01];
    let p = predict(&model, &q).unwrap();
    let (on, or) = oracle.scores(&q);
    assert!(or > on);
    assert!(p.sim_rosacea > p.sim_normal);
    assert_eq!(p.label, Label::Rosacea);
    assert!((p.sim_normal - on).abs() < 1e-9 && (p.sim_rosacea - or).abs() < 1e-9);

    let q = [0.95, 0.05, 0.0];
    assert_eq!(oracle.classify(&q), Label::Normal);
    assert_eq!(predict(&model, &q).unwrap().label, Label::Normal);
}

#[test]
fn whitened_cosine_matches_inverse_form_on_full_rank_data() {
    let mut r = rng(3);
    for _ in 0..10 {
        let d = r.gen_range(2..=20);
        let c = d + r.gen_range(2..=15);
        let x = gaussian(&mut r, d, c);
        let (xc, sigma) = covariance(&to_na(&x));
        let w_direct = direct_whitening(&sigma);
        let xc = Matrix::new(d, c, xc.as_slice().to_vec()).unwrap();
        let p = TruncationPolicy::default();
        let w = whitening_matrix(&pca_gram_trick(&xc, &p).unwrap(), &p).unwrap();
        let u = gaussian(&mut r, d, 1);
        let v = gaussian(&mut r, d, 1);
        let ours = wcs_core::similarity::whitened_cosine(u.as_slice(), v.as_slice(), &w).unwrap();
        let un = DVector::from_column_slice(u.as_slice());
        let vn = DVector::from_column_slice(v.as_slice());
        assert!((ours - inverse_form(&sigma, &w_direct, &un, &vn)).abs() < 1e-6);
    }
}

#[test]
fn full_rank_pca_knn_equals_plain_knn() {
    let mut r = rng(8);
    for _ in 0..5 {
        let d = r.gen_range(3..=12);
        let (n, m) = (r.gen_range(2..=6), r.gen_range(2..=6));
        let xn = gaussian(&mut r, d, n);
        let xr = gaussian(&mut r, d, m);
        let p = TruncationPolicy::default();
        let rank = pca_gram_trick(
            &center_columns(&xn.hstack(&xr).unwrap(), &column_mean(&xn.hstack(&xr).unwrap()).unwrap())
                .unwrap(),
            &p,
        )
        .unwrap()
        .len();
        let pipe = train_pca_pipeline(&xn, &xr, ComponentSelection::Fixed(rank), PcaHead::KnnL2 { k: 1 }, &p)
            .unwrap();
        let mut labels = vec![Label::Normal; n];
        labels.extend(vec![Label::Rosacea; m]);
        let knn = train_knn(&xn.hstack(&xr).unwrap(), &labels, 1, Metric::L2).unwrap();
        for _ in 0..20 {
            let q = gaussian(&mut r, d, 1);
            assert_eq!(
                pipe.predict(q.as_slice()).unwrap().label,
                predict_knn(&knn, q.as_slice()).unwrap().label
            );
        }
    }
}

#[test]
fn one_component_nearest_mean_on_constructed_fixture() {
    // classes separated along the first axis, small spread elsewhere
    let mut r = rng(21);
    let mut make = |offset: f64| {
        let mut x = gaussian(&mut r, 6, 10);
        for j in 0..10 {
            let col = x.column_mut(j);
            col.iter_mut().for_each(|v| *v *= 0.1);
            col[0] += offset;
        }
        x
    };
    let xn = make(-5.0);
    let xr = make(5.0);
    let pipe = train_pca_pipeline(
        &xn,
        &xr,
        ComponentSelection::Fixed(1),
        PcaHead::NearestMean,
        &TruncationPolicy::default(),
    )
    .unwrap();
    let r = metrics(&evaluate(&pipe, &xn, &xr).unwrap(), "pca").unwrap();
    assert_eq!(r.accuracy, 1.0);
}

#[test]
fn indistinguishable_classes_are_at_chance() {
    let spec = SyntheticSpec {
        d: 16,
        n: 50,
        m: 50,
        separation: 0.0,
        sigma: 1.0,
        seed: 4,
    };
    let (train, test) = generate_synthetic_with_holdout(&spec, 1000, 1000).unwrap();
    let model = train_whitened_cosine(&train.x_normal, &train.x_rosacea, &TruncationPolicy::default()).unwrap();
    let acc = metrics(&evaluate(&model, &test.x_normal, &test.x_rosacea).unwrap(), "x")
        .unwrap()
        .accuracy;
    assert!((acc - 0.5).abs() < 0.06, "accuracy {acc}");
}

#[test]
fn well_separated_clouds_are_detected() {
    let spec = SyntheticSpec {
        d: 64,
        n: 100,
        m: 100,
        separation: 10.0,
        sigma: 1.0,
        seed: 64,
    };
    let (train, test) = generate_synthetic_with_holdout(&spec, 200, 200).unwrap();
    let model = train_whitened_cosine(&train.x_normal, &train.x_rosacea, &TruncationPolicy::default()).unwrap();
    let acc = metrics(&evaluate(&model, &test.x_normal, &test.x_rosacea).unwrap(), "x")
        .unwrap()
        .accuracy;
    assert!(acc >= 0.98, "accuracy {acc}");
    // the training set itself is classified perfectly
    let train_acc = metrics(&evaluate(&model, &train.x_normal, &train.x_rosacea).unwrap(), "x")
        .unwrap()
        .accuracy;
    assert_eq!(train_acc, 1.0);
}

#[test]
fn five_sample_rank_cap() {
    let mut r = rng(5);
    for d in [3, 10, 40] {
        let xn = gaussian(&mut r, d, 3);
        let xr = gaussian(&mut r, d, 2);
        let m = train_whitened_cosine(&xn, &xr, &TruncationPolicy::default()).unwrap();
        assert!(m.retained_rank() <= 4);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn whitening_identity_and_residuals(seed in any::<u64>(), d in 3usize..=40, c in 3usize..=16) {
        let mut r = rng(seed);
        let x = gaussian(&mut r, d, c);
        let xc = center_columns(&x, &column_mean(&x).unwrap()).unwrap();
        let p = TruncationPolicy::default();
        let es = pca_gram_trick(&xc, &p).unwrap();
        prop_assert!(es.len() < c);
        let sigma = to_na(&covariance_unbiased(&xc).unwrap());
        for i in 0..es.len() {
            let u = DVector::from_column_slice(es.vector(i));
            prop_assert!((&sigma * &u - es.values[i] * &u).norm() <= 1e-8 * (1.0 + es.values[i]));
        }
        let w = to_na(whitening_matrix(&es, &p).unwrap().matrix());
        let id = w.transpose() * &sigma * &w;
        let k = id.nrows();
        prop_assert!((id - nalgebra::DMatrix::<f64>::identity(k, k)).amax() <= 1e-6);
    }

    #[test]
    fn centering_zeroes_the_mean(seed in any::<u64>(), d in 1usize..=20, c in 1usize..=20) {
        let mut r = rng(seed);
        let x = gaussian(&mut r, d, c);
        let mean = column_mean(&center_columns(&x, &column_mean(&x).unwrap()).unwrap()).unwrap();
        prop_assert!(mean.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn decision_is_scale_invariant_in_query(seed in any::<u64>(), alpha in 1e-3..1e3f64) {
        let mut r = rng(seed);
        let xn = gaussian(&mut r, 8, 4);
        let xr = gaussian(&mut r, 8, 3);
        let model = train_whitened_cosine(&xn, &xr, &TruncationPolicy::default()).unwrap();
        let q = gaussian(&mut r, 8, 1);
        let scaled: Vec<f64> = q.as_slice().iter().map(|v| v * alpha).collect();
        let a = predict(&model, q.as_slice()).unwrap();
        let b = predict(&model, &scaled).unwrap();
        prop_assert!((a.sim_normal - b.sim_normal).abs() < 1e-9);
        prop_assert!((a.sim_rosacea - b.sim_rosacea).abs() < 1e-9);
        if (a.sim_normal - a.sim_rosacea).abs() > 1e-9 {
            prop_assert_eq!(a.label, b.label);
        }
    }

    #[test]
    fn knn_memorizes_distinct_points(seed in any::<u64>(), d in 1usize..=6, c in 1usize..=20) {
        let mut r = rng(seed);
        let x = gaussian(&mut r, d, c);
        let labels: Vec<Label> = (0..c).map(|_| if r.gen::<bool>() { Label::Rosacea } else { Label::Normal }).collect();
        for metric in [Metric::L1, Metric::L2] {
            let knn = train_knn(&x, &labels, 1, metric).unwrap();
            for j in 0..c {
                prop_assert_eq!(predict_knn(&knn, x.column(j)).unwrap().label, labels[j]);
            }
        }
    }
}
