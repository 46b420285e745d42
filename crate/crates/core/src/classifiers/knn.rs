use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{check_dim, Classifier, Label, Prediction};
use crate::error::{Error, Operand, Result};
use crate::linalg::{norm, Matrix};
use crate::similarity::{cosine, euclidean, manhattan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    L1,
    L2,
    Cosine,
}

impl Metric {
    /// Cosine is a similarity; the others are distances.
    pub fn larger_is_closer(self) -> bool {
        self == Metric::Cosine
    }

    fn measure(self, a: &[f64], b: &[f64]) -> Result<f64> {
        match self {
            Metric::L1 => manhattan(a, b),
            Metric::L2 => euclidean(a, b),
            Metric::Cosine => cosine(a, b),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::L1 => "l1",
            Metric::L2 => "l2",
            Metric::Cosine => "cosine",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" | "manhattan" => Ok(Metric::L1),
            "l2" | "euclidean" => Ok(Metric::L2),
            "cos" | "cosine" => Ok(Metric::Cosine),
            other => Err(Error::invalid(format!("unknown metric {other:?}"))),
        }
    }
}

/// Lazy k-nearest-neighbour classifier; the training columns are stored by
/// value.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    data: Matrix,
    labels: Vec<Label>,
    k: usize,
    metric: Metric,
}

impl KnnModel {
    pub fn data(&self) -> &Matrix {
        &self.data
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }
}

pub fn train_knn(x: &Matrix, labels: &[Label], k: usize, metric: Metric) -> Result<KnnModel> {
    if x.cols() == 0 {
        return Err(Error::EmptySampleSet);
    }
    if labels.len() != x.cols() {
        return Err(Error::invalid(format!(
            "{} labels for {} samples",
            labels.len(),
            x.cols()
        )));
    }
    if k == 0 || k > x.cols() {
        return Err(Error::invalid(format!(
            "k must be in 1..={} (got {k})",
            x.cols()
        )));
    }
    if k.is_multiple_of(2) {
        log::warn!("k = {k} is even; vote ties resolve to normal");
    }
    if metric == Metric::Cosine {
        if let Some(j) = x.columns().position(|c| norm(c) == 0.0) {
            return Err(Error::invalid(format!(
                "training sample {j} is a zero vector, undefined under cosine"
            )));
        }
    }
    Ok(KnnModel {
        data: x.clone(),
        labels: labels.to_vec(),
        k,
        metric,
    })
}

/// Majority vote among the `k` closest training samples.
///
/// Equal scores rank the lower training index first; a tied vote is normal.
/// The prediction's score fields hold the mean metric value of the neighbours
/// from each class, or NaN when a class has no neighbour among the `k`.
pub fn predict_knn(model: &KnnModel, x: &[f64]) -> Result<Prediction> {
    check_dim(model.data.rows(), x.len())?;
    if model.metric == Metric::Cosine && norm(x) == 0.0 {
        return Err(Error::ZeroVector(Operand::Query));
    }
    let mut scored = model
        .data
        .columns()
        .enumerate()
        .map(|(j, c)| model.metric.measure(x, c).map(|s| (s, j)))
        .collect::<Result<Vec<_>>>()?;

    let larger = model.metric.larger_is_closer();
    let rank = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
        let by_score = if larger {
            b.0.total_cmp(&a.0)
        } else {
            a.0.total_cmp(&b.0)
        };
        by_score.then(a.1.cmp(&b.1))
    };
    let k = model.k;
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, rank);
        scored.truncate(k);
    }
    scored.sort_by(rank);

    let (mut sum_n, mut cnt_n, mut sum_r, mut cnt_r) = (0.0, 0usize, 0.0, 0usize);
    for &(s, j) in &scored {
        match model.labels[j] {
            Label::Normal => {
                sum_n += s;
                cnt_n += 1;
            }
            Label::Rosacea => {
                sum_r += s;
                cnt_r += 1;
            }
        }
    }
    let mean = |s: f64, c: usize| if c == 0 { f64::NAN } else { s / c as f64 };
    Ok(Prediction {
        label: if cnt_r > cnt_n {
            Label::Rosacea
        } else {
            Label::Normal
        },
        sim_normal: mean(sum_n, cnt_n),
        sim_rosacea: mean(sum_r, cnt_r),
    })
}

impl Classifier for KnnModel {
    fn dim(&self) -> usize {
        self.data.rows()
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        predict_knn(self, x)
    }
}
