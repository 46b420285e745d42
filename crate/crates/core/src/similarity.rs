//! The (dis)similarity measures used by the detector and its baselines.
//!
//! Cosine-family functions return a similarity in `[-1, 1]` (larger is
//! closer); [`manhattan`] and [`euclidean`] return distances (smaller is
//! closer).

use crate::error::{Error, Operand, Result};
use crate::linalg::{dot, norm, WhiteningMatrix};

fn check_len(u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            actual: v.len(),
        });
    }
    Ok(())
}

/// Cosine of already whitened coordinates `a = W^t u`, `b = W^t v`.
pub fn cosine_of_projections(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a, b)?;
    let na = norm(a);
    if na == 0.0 {
        return Err(Error::WhitenedNullSpace(Operand::Left));
    }
    let nb = norm(b);
    if nb == 0.0 {
        return Err(Error::WhitenedNullSpace(Operand::Right));
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Whitened cosine similarity `(W^t u)^t (W^t v) / (|W^t u| |W^t v|)`.
///
/// Evaluated in the `k`-dimensional whitened space; the inverse covariance
/// is never formed.
pub fn whitened_cosine(u: &[f64], v: &[f64], w: &WhiteningMatrix) -> Result<f64> {
    check_len(u, v)?;
    if u.len() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            actual: u.len(),
        });
    }
    let a = w.project(u)?;
    let b = w.project(v)?;
    cosine_of_projections(&a, &b)
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    check_len(u, v)?;
    let nu = norm(u);
    if nu == 0.0 {
        return Err(Error::ZeroVector(Operand::Left));
    }
    let nv = norm(v);
    if nv == 0.0 {
        return Err(Error::ZeroVector(Operand::Right));
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

/// L1 distance.
pub fn manhattan(u: &[f64], v: &[f64]) -> Result<f64> {
    check_len(u, v)?;
    Ok(u.iter().zip(v).map(|(a, b)| (a - b).abs()).sum())
}

/// L2 distance.
pub fn euclidean(u: &[f64], v: &[f64]) -> Result<f64> {
    check_len(u, v)?;
    Ok(u.iter()
        .zip(v)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}
