use serde::{Deserialize, Serialize};

use super::knn::{train_knn, KnnModel, Metric};
use super::{check_dim, Classifier, Label, Prediction};
use crate::error::{Error, Result};
use crate::linalg::{center_columns, column_mean, pca_gram_trick, Matrix, TruncationPolicy, Vector};
use crate::similarity::euclidean;

/// How many principal components the pipeline keeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ComponentSelection {
    Fixed(usize),
    /// Smallest count whose eigenvalues reach this fraction of the retained
    /// variance.
    VarianceFraction(f64),
}

impl Default for ComponentSelection {
    fn default() -> Self {
        ComponentSelection::VarianceFraction(0.95)
    }
}

/// Classifier applied after projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PcaHead {
    KnnL2 { k: usize },
    NearestMean,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PcaInner {
    Knn(KnnModel),
    /// Projected class means, compared under L2.
    NearestMean {
        mean_normal: Vec<f64>,
        mean_rosacea: Vec<f64>,
    },
}

/// Class-independent PCA projection followed by a classifier in the
/// projected space.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaPipelineModel {
    projection: Matrix,
    grand_mean: Vector,
    inner: PcaInner,
}

impl PcaPipelineModel {
    pub fn from_parts(projection: Matrix, grand_mean: Vector, inner: PcaInner) -> Result<Self> {
        check_dim(projection.rows(), grand_mean.len())?;
        let k = projection.cols();
        match &inner {
            PcaInner::Knn(m) => check_dim(k, m.data().rows())?,
            PcaInner::NearestMean {
                mean_normal,
                mean_rosacea,
            } => {
                check_dim(k, mean_normal.len())?;
                check_dim(k, mean_rosacea.len())?;
            }
        }
        Ok(PcaPipelineModel {
            projection,
            grand_mean,
            inner,
        })
    }

    pub fn projection(&self) -> &Matrix {
        &self.projection
    }

    pub fn grand_mean(&self) -> &Vector {
        &self.grand_mean
    }

    pub fn inner(&self) -> &PcaInner {
        &self.inner
    }

    pub fn components(&self) -> usize {
        self.projection.cols()
    }

    /// `P^t (x - M0)`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.grand_mean.len(), x.len())?;
        let centered: Vec<f64> = x.iter().zip(self.grand_mean.iter()).map(|(a, b)| a - b).collect();
        self.projection.tr_mul_vec(&centered)
    }
}

pub fn train_pca_pipeline(
    x_normal: &Matrix,
    x_rosacea: &Matrix,
    components: ComponentSelection,
    head: PcaHead,
    policy: &TruncationPolicy,
) -> Result<PcaPipelineModel> {
    if x_normal.cols() == 0 || x_rosacea.cols() == 0 {
        return Err(Error::EmptySampleSet);
    }
    let x = x_normal.hstack(x_rosacea)?;
    let grand_mean = column_mean(&x)?;
    let centered = center_columns(&x, &grand_mean)?;
    let spectrum = pca_gram_trick(&centered, policy)?;
    let available = spectrum.len();

    let k = match components {
        ComponentSelection::Fixed(0) => {
            return Err(Error::invalid("component count must be at least 1"))
        }
        ComponentSelection::Fixed(k) if k > available => {
            return Err(Error::invalid(format!(
                "{k} components requested but the data has rank {available}"
            )))
        }
        ComponentSelection::Fixed(k) => k,
        ComponentSelection::VarianceFraction(f) => {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::invalid(format!("variance fraction {f} not in (0, 1]")));
            }
            let total: f64 = spectrum.values.iter().sum();
            let mut acc = 0.0;
            let mut k = available;
            for (i, v) in spectrum.values.iter().enumerate() {
                acc += v;
                if acc >= f * total {
                    k = i + 1;
                    break;
                }
            }
            k
        }
    };

    let d = centered.rows();
    let projection = Matrix::new(d, k, spectrum.vectors.as_slice()[..d * k].to_vec())?;
    let projected: Vec<Vec<f64>> = centered
        .columns()
        .map(|c| projection.tr_mul_vec(c))
        .collect::<Result<_>>()?;
    let projected = Matrix::from_columns(&projected)?;
    let n = x_normal.cols();

    let inner = match head {
        PcaHead::KnnL2 { k: neighbours } => {
            let labels: Vec<Label> = (0..x.cols())
                .map(|j| if j < n { Label::Normal } else { Label::Rosacea })
                .collect();
            PcaInner::Knn(train_knn(&projected, &labels, neighbours, Metric::L2)?)
        }
        PcaHead::NearestMean => {
            let normal = Matrix::new(k, n, projected.as_slice()[..k * n].to_vec())?;
            let rosacea = Matrix::new(k, x.cols() - n, projected.as_slice()[k * n..].to_vec())?;
            PcaInner::NearestMean {
                mean_normal: column_mean(&normal)?.into_inner(),
                mean_rosacea: column_mean(&rosacea)?.into_inner(),
            }
        }
    };
    PcaPipelineModel::from_parts(projection, grand_mean, inner)
}

impl Classifier for PcaPipelineModel {
    fn dim(&self) -> usize {
        self.grand_mean.len()
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let y = self.project(x)?;
        match &self.inner {
            PcaInner::Knn(m) => super::predict_knn(m, &y),
            PcaInner::NearestMean {
                mean_normal,
                mean_rosacea,
            } => Ok(Prediction::from_distances(
                euclidean(&y, mean_normal)?,
                euclidean(&y, mean_rosacea)?,
            )),
        }
    }
}
