//! Browser bindings for the whitened cosine similarity detector.
//!
//! Each exported function takes plain numbers and returns a JSON string, so
//! the page needs no generated TypeScript glue beyond `wasm-bindgen`'s own.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;
use wcs_core::classifiers::{predict, train_whitened_cosine};
use wcs_core::dataset::{generate_synthetic, SyntheticSpec};
use wcs_core::evaluation::{evaluate, metrics, ConfusionMatrix, MetricsReport};
use wcs_core::linalg::{center_columns, column_mean, covariance_unbiased, eigh_symmetric, pca_gram_trick};
use wcs_core::{selftest, Label, TruncationPolicy};

#[derive(Serialize)]
pub struct DecisionMap {
    pub normal: Vec<[f64; 2]>,
    pub rosacea: Vec<[f64; 2]>,
    pub mean_normal: [f64; 2],
    pub mean_rosacea: [f64; 2],
    pub grand_mean: [f64; 2],
    pub bounds: [f64; 4],
    pub grid: usize,
    /// Row-major, `true` where the detector says rosacea.
    pub cells: Vec<bool>,
    pub train_report: MetricsReport,
}

#[derive(Serialize)]
pub struct SpectrumComparison {
    pub d: usize,
    pub c: usize,
    pub direct: Vec<f64>,
    pub gram: Vec<f64>,
    pub max_eigenvalue_error: f64,
    pub max_eigenvector_error: f64,
}

/// Two Gaussian clouds in the plane, the trained detector and its decision
/// regions on a `grid`×`grid` raster.
pub fn decision_map(
    n: usize,
    m: usize,
    separation: f64,
    offset: f64,
    seed: u64,
    grid: usize,
    center_at_predict: bool,
) -> wcs_core::Result<DecisionMap> {
    if !(2..=400).contains(&grid) {
        return Err(wcs_core::Error::InvalidParameter(format!("grid must be in 2..=400, got {grid}")));
    }
    let mut data = generate_synthetic(&SyntheticSpec {
        d: 2,
        n,
        m,
        separation,
        sigma: 1.0,
        seed,
    })?;
    for x in [&mut data.x_normal, &mut data.x_rosacea] {
        for j in 0..x.cols() {
            for v in x.column_mut(j) {
                *v += offset;
            }
        }
    }
    let model = train_whitened_cosine(&data.x_normal, &data.x_rosacea, &TruncationPolicy::default())?
        .with_center_at_predict(center_at_predict);

    let pts = |x: &wcs_core::Matrix| x.columns().map(|c| [c[0], c[1]]).collect::<Vec<_>>();
    let normal = pts(&data.x_normal);
    let rosacea = pts(&data.x_rosacea);
    let all = normal.iter().chain(&rosacea);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in all {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let pad = 0.15 * (x1 - x0).max(y1 - y0).max(1.0);
    let bounds = [x0 - pad, x1 + pad, y0 - pad, y1 + pad];

    let mut cells = Vec::with_capacity(grid * grid);
    for r in 0..grid {
        let y = bounds[3] - (r as f64 + 0.5) / grid as f64 * (bounds[3] - bounds[2]);
        for c in 0..grid {
            let x = bounds[0] + (c as f64 + 0.5) / grid as f64 * (bounds[1] - bounds[0]);
            // Points on a null direction have no defined class; draw them as normal.
            let label = predict(&model, &[x, y]).map_or(Label::Normal, |p| p.label);
            cells.push(label == Label::Rosacea);
        }
    }
    let cm = evaluate(&model, &data.x_normal, &data.x_rosacea)?;
    let two = |v: &[f64]| [v[0], v[1]];
    Ok(DecisionMap {
        normal,
        rosacea,
        mean_normal: two(model.mean_normal()),
        mean_rosacea: two(model.mean_rosacea()),
        grand_mean: two(model.grand_mean()),
        bounds,
        grid,
        cells,
        train_report: metrics(&cm, "training set")?,
    })
}

pub fn metrics_from_counts(tp: u64, tn: u64, fp: u64, fn_: u64) -> wcs_core::Result<MetricsReport> {
    metrics(&ConfusionMatrix::new(tp, tn, fp, fn_), "counts")
}

/// Eigenvalues of the covariance of a random `d`×`c` sample, once from the
/// d×d matrix and once from the c×c Gram matrix.
pub fn compare_spectra(d: usize, c: usize, seed: u64) -> wcs_core::Result<SpectrumComparison> {
    if !(1..=200).contains(&d) || !(2..=200).contains(&c) {
        return Err(wcs_core::Error::InvalidParameter(
            "need 1 <= d <= 200 and 2 <= c <= 200".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = selftest::random_matrix(&mut rng, d, c);
    let xc = center_columns(&x, &column_mean(&x)?)?;
    let direct = eigh_symmetric(&covariance_unbiased(&xc)?)?.values;
    let gram = pca_gram_trick(&xc, &TruncationPolicy::default())?.values;
    let (ev, vec) = selftest::gram_vs_direct(&xc, false)?;
    Ok(SpectrumComparison {
        d,
        c,
        direct,
        gram,
        max_eigenvalue_error: ev,
        max_eigenvector_error: vec,
    })
}

fn to_json<T: Serialize>(r: wcs_core::Result<T>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = decisionMap)]
pub fn decision_map_js(
    n: u32,
    m: u32,
    separation: f64,
    offset: f64,
    seed: u32,
    grid: u32,
    center_at_predict: bool,
) -> Result<String, JsError> {
    to_json(decision_map(
        n as usize,
        m as usize,
        separation,
        offset,
        seed as u64,
        grid as usize,
        center_at_predict,
    ))
}

#[wasm_bindgen(js_name = metricsFromCounts)]
pub fn metrics_from_counts_js(tp: u32, tn: u32, fp: u32, fn_: u32) -> Result<String, JsError> {
    to_json(metrics_from_counts(tp as u64, tn as u64, fp as u64, fn_ as u64))
}

#[wasm_bindgen(js_name = compareSpectra)]
pub fn compare_spectra_js(d: u32, c: u32, seed: u32) -> Result<String, JsError> {
    to_json(compare_spectra(d as usize, c as usize, seed as u64))
}
