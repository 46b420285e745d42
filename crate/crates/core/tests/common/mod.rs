//! Reference implementations used as test oracles. They deliberately go
//! through nalgebra and the full `d x d` covariance instead of the crate's
//! own eigensolver and Gram-matrix route.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wcs_core::{Label, Matrix};

pub const REL_TRUNCATION: f64 = 1e-10;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::new(rows, cols, data).unwrap()
}

pub fn to_na(x: &Matrix) -> DMatrix<f64> {
    DMatrix::from_column_slice(x.rows(), x.cols(), x.as_slice())
}

/// Centered copy and `X X^t / (c - 1)`, both via nalgebra.
pub fn covariance(x: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let c = x.ncols();
    let mean = x.column_mean();
    let mut xc = x.clone();
    for mut col in xc.column_iter_mut() {
        col -= &mean;
    }
    let sigma = &xc * xc.transpose() / (c as f64 - 1.0);
    (xc, sigma)
}

/// Eigenpairs of a symmetric matrix sorted by descending eigenvalue.
pub fn sorted_eigen(a: &DMatrix<f64>) -> Vec<(f64, DVector<f64>)> {
    let eig = SymmetricEigen::new(a.clone());
    let mut pairs: Vec<(f64, DVector<f64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, eig.eigenvectors.column(i).into_owned()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs
}

/// `W = Phi Lambda^{-1/2}` from the materialized covariance, keeping
/// eigenvalues above `1e-10 * lambda_max`.
pub fn direct_whitening(sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let pairs = sorted_eigen(sigma);
    let lmax = pairs[0].0;
    let kept: Vec<DVector<f64>> = pairs
        .iter()
        .filter(|(l, _)| *l > REL_TRUNCATION * lmax)
        .map(|(l, v)| v / l.sqrt())
        .collect();
    DMatrix::from_columns(&kept)
}

pub fn projected_cosine(w: &DMatrix<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let a = w.transpose() * u;
    let b = w.transpose() * v;
    a.dot(&b) / (a.norm() * b.norm())
}

/// Literal train-and-classify: build `[X_normal, X_rosacea]`, class and
/// grand means, centre, form Sigma, eigendecompose, whiten, and compare the
/// query against both raw class means.
pub struct BruteForceDetector {
    pub w: DMatrix<f64>,
    pub mean_normal: DVector<f64>,
    pub mean_rosacea: DVector<f64>,
}

impl BruteForceDetector {
    pub fn train(x_normal: &Matrix, x_rosacea: &Matrix) -> Self {
        let xn = to_na(x_normal);
        let xr = to_na(x_rosacea);
        let mut x = DMatrix::zeros(xn.nrows(), xn.ncols() + xr.ncols());
        x.columns_mut(0, xn.ncols()).copy_from(&xn);
        x.columns_mut(xn.ncols(), xr.ncols()).copy_from(&xr);
        let (_, sigma) = covariance(&x);
        BruteForceDetector {
            w: direct_whitening(&sigma),
            mean_normal: xn.column_mean(),
            mean_rosacea: xr.column_mean(),
        }
    }

    pub fn scores(&self, x: &[f64]) -> (f64, f64) {
        let q = DVector::from_column_slice(x);
        (projected_cosine(&self.w, &q, &self.mean_normal), projected_cosine(&self.w, &q, &self.mean_rosacea))
    }

    pub fn classify(&self, x: &[f64]) -> Label {
        let (sn, sr) = self.scores(x);
        if sn < sr {
            Label::Rosacea
        } else {
            Label::Normal
        }
    }
}

/// Explicit-inverse form `u^t Sigma^{-1} v / (|W^t u| |W^t v|)`.
pub fn inverse_form(sigma: &DMatrix<f64>, w: &DMatrix<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let inv = sigma.clone().try_inverse().expect("full-rank covariance");
    let num = u.dot(&(inv * v));
    num / ((w.transpose() * u).norm() * (w.transpose() * v).norm())
}
