//! Whitened cosine similarity detector for high-dimensional vectors.
//!
//! The detector compares a query against the two class means after whitening
//! with the pooled training covariance. Because flattened images have far more
//! dimensions than training samples, the covariance spectrum is computed from
//! the small sample-by-sample Gram matrix instead of the full covariance.
//!
//! Module map:
//!
//! - [`linalg`]: dense vectors/matrices, symmetric eigensolver, Gram-matrix PCA, whitening
//! - [`similarity`]: whitened cosine, cosine, Manhattan and Euclidean measures
//! - [`classifiers`]: the detector plus KNN and PCA baselines
//! - [`evaluation`]: confusion matrices, metrics and report rendering
//! - [`dataset`]: image ingestion, directory manifests, splits, CSV fixtures, synthetic data
//! - [`persist`]: the binary model file format
//! - [`selftest`]: numerical self-checks exposed through the CLI

pub mod classifiers;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod linalg;
mod par;
pub mod persist;
pub mod selftest;
pub mod similarity;

pub use classifiers::{Label, Prediction};
pub use error::{Error, Result};
pub use linalg::{EigenSystem, Matrix, TruncationPolicy, Vector, WhiteningMatrix};
