//! Dense vector and matrix primitives plus the covariance machinery the
//! detector is built on.
//!
//! Matrices are column-major with one sample per column, so a `d x c` matrix
//! holds `c` feature vectors of length `d`.

mod eigen;
mod pca;

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use eigen::{eigh_symmetric, EigenSystem};
pub use pca::{pca_gram_trick, whitening_matrix, TruncationPolicy, WhiteningMatrix};

/// A non-empty vector of finite `f64` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Vector(data))
    }

    pub fn zeros(len: usize) -> Self {
        assert!(len > 0, "vector length must be positive");
        Vector(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Multiplies every element by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Vector {
        Vector(self.0.iter().map(|v| v * alpha).collect())
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for Vector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Dense column-major matrix of finite values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from column-major data.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Stacks equally long columns side by side.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        let Some(first) = columns.first() else {
            return Err(Error::EmptySampleSet);
        };
        let rows = first.as_ref().len();
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            let c = c.as_ref();
            if c.len() != rows {
                return Err(Error::DimensionMismatch {
                    expected: rows,
                    actual: c.len(),
                });
            }
            data.extend_from_slice(c);
        }
        Matrix::new(rows, columns.len(), data)
    }

    /// Builds a matrix from row-major nested rows; handy for small literals.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut m = Matrix::zeros(nrows, ncols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != ncols {
                return Err(Error::DimensionMismatch {
                    expected: ncols,
                    actual: r.len(),
                });
            }
            for (j, &v) in r.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Matrix::new(nrows, ncols, m.data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.cols).map(move |j| self.column(j))
    }

    /// `[self, other]`: appends the columns of `other`.
    pub fn hstack(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                actual: other.rows,
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols + other.cols,
            data,
        })
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// `self * x`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: x.len(),
            });
        }
        let mut out = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.column(j)) {
                *o += a * xj;
            }
        }
        Ok(out)
    }

    /// `self^t * x`, one dot product per column.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                actual: x.len(),
            });
        }
        Ok(self.columns().map(|c| dot(c, x)).collect())
    }

    /// Plain matrix product; intended for small matrices.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: other.rows,
            });
        }
        let mut data = Vec::with_capacity(self.rows * other.cols);
        for j in 0..other.cols {
            data.extend(self.mul_vec(other.column(j))?);
        }
        Ok(Matrix {
            rows: self.rows,
            cols: other.cols,
            data,
        })
    }

    /// `self^t * self`, the `c x c` Gram matrix of the columns.
    pub fn gram(&self) -> Matrix {
        let c = self.cols;
        let upper: Vec<Vec<f64>> = crate::par::map_indices(c, |j| {
            (0..=j).map(|i| dot(self.column(i), self.column(j))).collect()
        });
        let mut g = Matrix::zeros(c, c);
        for (j, col) in upper.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                g.set(i, j, v);
                g.set(j, i, v);
            }
        }
        g
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Arithmetic mean of the columns.
pub fn column_mean(x: &Matrix) -> Result<Vector> {
    if x.cols() == 0 || x.rows() == 0 {
        return Err(Error::EmptySampleSet);
    }
    let mut mean = vec![0.0; x.rows()];
    for col in x.columns() {
        for (m, v) in mean.iter_mut().zip(col) {
            *m += v;
        }
    }
    let c = x.cols() as f64;
    mean.iter_mut().for_each(|m| *m /= c);
    Vector::new(mean)
}

/// Subtracts `mu` from every column.
pub fn center_columns(x: &Matrix, mu: &[f64]) -> Result<Matrix> {
    if mu.len() != x.rows() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            actual: mu.len(),
        });
    }
    let mut out = x.clone();
    for j in 0..out.cols() {
        for (v, m) in out.column_mut(j).iter_mut().zip(mu) {
            *v -= m;
        }
    }
    Ok(out)
}

/// Materializes the unbiased covariance `X X^t / (c - 1)` of already centered
/// columns.
///
/// This is `d x d`; the training path never calls it. It exists for small
/// problems and as the reference the Gram-matrix route is checked against.
pub fn covariance_unbiased(x_centered: &Matrix) -> Result<Matrix> {
    let c = x_centered.cols();
    if c < 2 {
        return Err(Error::TooFewSamples(c));
    }
    let d = x_centered.rows();
    let mut cov = Matrix::zeros(d, d);
    for col in x_centered.columns() {
        for j in 0..d {
            let cj = col[j];
            if cj == 0.0 {
                continue;
            }
            for i in 0..=j {
                cov.data[j * d + i] += col[i] * cj;
            }
        }
    }
    let denom = (c - 1) as f64;
    for j in 0..d {
        for i in 0..=j {
            let v = cov.get(i, j) / denom;
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    Ok(cov)
}
