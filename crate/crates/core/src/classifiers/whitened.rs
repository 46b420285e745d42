use std::borrow::Cow;

use super::{check_dim, Classifier, Prediction};
use crate::dataset::PreprocessSpec;
use crate::error::{Error, Operand, Result};
use crate::linalg::{
    center_columns, column_mean, pca_gram_trick, whitening_matrix, Matrix, TruncationPolicy,
    Vector, WhiteningMatrix,
};
use crate::similarity::cosine_of_projections;

/// Trained whitened cosine detector.
///
/// Class means are kept uncentered; the grand mean is only used to center the
/// training data for covariance estimation unless `center_at_predict` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct WhitenedCosineModel {
    grand_mean: Vector,
    mean_normal: Vector,
    mean_rosacea: Vector,
    whitening: WhiteningMatrix,
    preprocess: Option<PreprocessSpec>,
    train_counts: (usize, usize),
    center_at_predict: bool,
    cache: Projections,
}

/// `W^t` applied to the stored means.
#[derive(Debug, Clone, PartialEq)]
struct Projections {
    grand: Vec<f64>,
    normal: Vec<f64>,
    rosacea: Vec<f64>,
}

impl WhitenedCosineModel {
    pub fn from_parts(
        grand_mean: Vector,
        mean_normal: Vector,
        mean_rosacea: Vector,
        whitening: WhiteningMatrix,
        train_counts: (usize, usize),
    ) -> Result<Self> {
        let d = whitening.dim();
        for v in [&grand_mean, &mean_normal, &mean_rosacea] {
            check_dim(d, v.len())?;
        }
        let (n, m) = train_counts;
        if n == 0 || m == 0 {
            return Err(Error::EmptySampleSet);
        }
        if whitening.retained_rank() > n + m - 1 {
            return Err(Error::invalid(format!(
                "retained rank {} exceeds n + m - 1 = {}",
                whitening.retained_rank(),
                n + m - 1
            )));
        }
        let cache = Projections {
            grand: whitening.project(&grand_mean)?,
            normal: whitening.project(&mean_normal)?,
            rosacea: whitening.project(&mean_rosacea)?,
        };
        Ok(WhitenedCosineModel {
            grand_mean,
            mean_normal,
            mean_rosacea,
            whitening,
            preprocess: None,
            train_counts,
            center_at_predict: false,
            cache,
        })
    }

    pub fn with_preprocess(mut self, spec: Option<PreprocessSpec>) -> Self {
        self.preprocess = spec;
        self
    }

    /// Subtract the grand mean from the query and both class means before
    /// comparing. Off by default.
    pub fn with_center_at_predict(mut self, on: bool) -> Self {
        self.center_at_predict = on;
        self
    }

    pub fn grand_mean(&self) -> &Vector {
        &self.grand_mean
    }

    pub fn mean_normal(&self) -> &Vector {
        &self.mean_normal
    }

    pub fn mean_rosacea(&self) -> &Vector {
        &self.mean_rosacea
    }

    pub fn whitening(&self) -> &WhiteningMatrix {
        &self.whitening
    }

    pub fn preprocess(&self) -> Option<&PreprocessSpec> {
        self.preprocess.as_ref()
    }

    pub fn train_counts(&self) -> (usize, usize) {
        self.train_counts
    }

    pub fn center_at_predict(&self) -> bool {
        self.center_at_predict
    }

    pub fn retained_rank(&self) -> usize {
        self.whitening.retained_rank()
    }
}

/// Trains the detector on the two class sample matrices (one sample per
/// column).
pub fn train_whitened_cosine(
    x_normal: &Matrix,
    x_rosacea: &Matrix,
    policy: &TruncationPolicy,
) -> Result<WhitenedCosineModel> {
    if x_normal.cols() == 0 || x_rosacea.cols() == 0 {
        return Err(Error::EmptySampleSet);
    }
    let x = x_normal.hstack(x_rosacea)?;
    if x.cols() < 2 {
        return Err(Error::TooFewSamples(x.cols()));
    }
    let mean_normal = column_mean(x_normal)?;
    let mean_rosacea = column_mean(x_rosacea)?;
    let grand_mean = column_mean(&x)?;
    let centered = center_columns(&x, &grand_mean)?;
    drop(x);
    let spectrum = pca_gram_trick(&centered, policy)?;
    drop(centered);
    let whitening = whitening_matrix(&spectrum, policy)?;
    WhitenedCosineModel::from_parts(
        grand_mean,
        mean_normal,
        mean_rosacea,
        whitening,
        (x_normal.cols(), x_rosacea.cols()),
    )
}

/// Scores `x` against both class means and labels it rosacea only when it is
/// strictly more similar to the rosacea mean.
pub fn predict(model: &WhitenedCosineModel, x: &[f64]) -> Result<Prediction> {
    check_dim(model.whitening.dim(), x.len())?;
    let cache = &model.cache;
    let mut query = model.whitening.project(x)?;
    let (normal, rosacea): (Cow<'_, [f64]>, Cow<'_, [f64]>) = if model.center_at_predict {
        for (q, g) in query.iter_mut().zip(&cache.grand) {
            *q -= g;
        }
        (
            sub(&cache.normal, &cache.grand).into(),
            sub(&cache.rosacea, &cache.grand).into(),
        )
    } else {
        (cache.normal.as_slice().into(), cache.rosacea.as_slice().into())
    };
    let score = |mean: &[f64], which: Operand| {
        cosine_of_projections(&query, mean).map_err(|e| match e {
            Error::WhitenedNullSpace(Operand::Left) => Error::WhitenedNullSpace(Operand::Query),
            Error::WhitenedNullSpace(_) => Error::WhitenedNullSpace(which),
            other => other,
        })
    };
    let sim_normal = score(&normal, Operand::NormalMean)?;
    let sim_rosacea = score(&rosacea, Operand::RosaceaMean)?;
    Ok(Prediction::from_similarities(sim_normal, sim_rosacea))
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

impl Classifier for WhitenedCosineModel {
    fn dim(&self) -> usize {
        self.whitening.dim()
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        predict(self, x)
    }
}
