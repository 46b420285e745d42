//! The whitened cosine nearest-class-mean detector and the baseline
//! classifiers it is compared against.

mod knn;
mod pca;
mod whitened;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub use knn::{predict_knn, train_knn, KnnModel, Metric};
pub use pca::{train_pca_pipeline, ComponentSelection, PcaHead, PcaInner, PcaPipelineModel};
pub use whitened::{predict, train_whitened_cosine, WhitenedCosineModel};

/// The two classes. `Rosacea` is the positive class throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Rosacea,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Rosacea
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Rosacea => "rosacea",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" | "0" | "n" => Ok(Label::Normal),
            "rosacea" | "1" | "r" => Ok(Label::Rosacea),
            other => Err(Error::invalid(format!("unknown label {other:?}"))),
        }
    }
}

/// A decision together with the per-class scores that produced it.
///
/// For the whitened cosine detector the scores are similarities to each class
/// mean. Baselines document their own score semantics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    pub sim_normal: f64,
    pub sim_rosacea: f64,
}

impl Prediction {
    /// Applies the detector's decision rule: rosacea only when the rosacea
    /// score is strictly larger, so exact ties go to normal.
    pub fn from_similarities(sim_normal: f64, sim_rosacea: f64) -> Self {
        let label = if sim_normal < sim_rosacea {
            Label::Rosacea
        } else {
            Label::Normal
        };
        Prediction {
            label,
            sim_normal,
            sim_rosacea,
        }
    }

    /// Same rule for distances, where smaller is closer.
    pub fn from_distances(dist_normal: f64, dist_rosacea: f64) -> Self {
        let label = if dist_rosacea < dist_normal {
            Label::Rosacea
        } else {
            Label::Normal
        };
        Prediction {
            label,
            sim_normal: dist_normal,
            sim_rosacea: dist_rosacea,
        }
    }
}

/// Anything that can label a single feature vector.
pub trait Classifier: Sync {
    fn dim(&self) -> usize;

    fn predict(&self, x: &[f64]) -> Result<Prediction>;

    /// Predicts every column of `x`; results follow column order.
    fn predict_columns(&self, x: &Matrix) -> Vec<Result<Prediction>> {
        crate::par::map_indices(x.cols(), |j| self.predict(x.column(j)))
    }
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}
