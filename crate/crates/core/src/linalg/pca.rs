//! Covariance spectrum through the Gram matrix and the whitening transform.
//!
//! For a centered `d x c` sample matrix `X` with `d >> c`, the nonzero
//! eigenpairs of `X X^t` are recovered from the `c x c` matrix `X^t X`: if
//! `X^t X v = lambda v` then `(X X^t)(X v) = lambda (X v)`. The mapped vector
//! `X v` has norm `sqrt(lambda)`, not one, so it is renormalized.

use serde::{Deserialize, Serialize};

use super::{eigh_symmetric, norm, EigenSystem, Matrix};
use crate::error::{Error, Result};
use crate::par::map_indices;

/// Decides which eigenvalues are kept when building `Lambda^{-1/2}`.
///
/// An eigenvalue survives when it exceeds both `relative * lambda_max` and
/// `absolute`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub relative: f64,
    pub absolute: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            relative: 1e-10,
            absolute: 1e-20,
        }
    }
}

impl TruncationPolicy {
    pub fn with_relative(relative: f64) -> Self {
        TruncationPolicy {
            relative,
            ..Default::default()
        }
    }

    pub fn threshold(&self, lambda_max: f64) -> f64 {
        (self.relative * lambda_max).max(self.absolute)
    }

    fn validate(&self) -> Result<()> {
        if !(self.relative >= 0.0 && self.relative < 1.0) || !(self.absolute >= 0.0) {
            return Err(Error::invalid(format!(
                "truncation tolerances must be non-negative and relative < 1 (got {}, {})",
                self.relative, self.absolute
            )));
        }
        Ok(())
    }
}

/// `W = Phi Lambda^{-1/2}` restricted to the retained eigenpairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhiteningMatrix {
    w: Matrix,
    eigenvalues: Vec<f64>,
}

impl WhiteningMatrix {
    /// Reassembles a whitening matrix from stored parts (used when loading
    /// model files).
    pub fn from_parts(w: Matrix, eigenvalues: Vec<f64>) -> Result<Self> {
        if w.cols() != eigenvalues.len() || eigenvalues.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: w.cols(),
                actual: eigenvalues.len(),
            });
        }
        if eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::invalid("whitening eigenvalues must be positive"));
        }
        Ok(WhiteningMatrix { w, eigenvalues })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.w
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn retained_rank(&self) -> usize {
        self.w.cols()
    }

    /// Input dimension `d`.
    pub fn dim(&self) -> usize {
        self.w.rows()
    }

    /// `W^t x`, the whitened `k`-dimensional coordinates of `x`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.w.tr_mul_vec(x)
    }
}

/// Eigenpairs of `X X^t / (c - 1)` computed from the `c x c` Gram matrix.
///
/// Only eigenvalues above the truncation threshold are returned, so the
/// result never has more than `c - 1` pairs for centered input.
pub fn pca_gram_trick(x_centered: &Matrix, policy: &TruncationPolicy) -> Result<EigenSystem> {
    policy.validate()?;
    let c = x_centered.cols();
    if c < 2 {
        return Err(Error::TooFewSamples(c));
    }
    let gram = x_centered.gram();
    let es = eigh_symmetric(&gram)?;
    let denom = (c - 1) as f64;
    let lambda_max = es.values[0] / denom;
    let threshold = policy.threshold(lambda_max);
    let retained: Vec<usize> = (0..es.len())
        .filter(|&i| es.values[i] / denom > threshold)
        .collect();
    if retained.is_empty() {
        return Err(Error::Degenerate);
    }

    let mapped: Vec<Vec<f64>> = map_indices(retained.len(), |r| {
        let i = retained[r];
        let mut u = x_centered
            .mul_vec(es.vector(i))
            .expect("gram eigenvector length equals column count");
        let len = norm(&u);
        u.iter_mut().for_each(|x| *x /= len);
        u
    });
    if mapped.iter().any(|u| u.iter().any(|x| !x.is_finite())) {
        return Err(Error::Degenerate);
    }
    let values = retained.iter().map(|&i| es.values[i] / denom).collect();
    Ok(EigenSystem {
        values,
        vectors: Matrix::from_columns(&mapped)?,
    })
}

/// Builds `W` with column `i` equal to `vectors[:, i] / sqrt(values[i])` for
/// every eigenvalue that survives `policy`.
pub fn whitening_matrix(es: &EigenSystem, policy: &TruncationPolicy) -> Result<WhiteningMatrix> {
    policy.validate()?;
    let lambda_max = es.values.iter().copied().fold(0.0, f64::max);
    let threshold = policy.threshold(lambda_max);
    let d = es.vectors.rows();
    let mut data = Vec::new();
    let mut eigenvalues = Vec::new();
    for (i, &lambda) in es.values.iter().enumerate() {
        if lambda > threshold {
            let s = lambda.sqrt();
            data.extend(es.vector(i).iter().map(|v| v / s));
            eigenvalues.push(lambda);
        }
    }
    if eigenvalues.is_empty() {
        return Err(Error::Degenerate);
    }
    let w = Matrix::new(d, eigenvalues.len(), data)?;
    Ok(WhiteningMatrix { w, eigenvalues })
}
