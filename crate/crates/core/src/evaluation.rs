//! Confusion matrices, accuracy/recall/precision/F1 and report rendering.
//!
//! Rosacea is the positive class. Ratios with a zero denominator are
//! reported as `None` (rendered `n/a`, `NA` or `null`), never as zero.

use std::fmt::Write as _;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::{Classifier, Label};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        ConfusionMatrix { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn record(&mut self, predicted: Label, truth: Label) {
        match (predicted, truth) {
            (Label::Rosacea, Label::Rosacea) => self.tp += 1,
            (Label::Normal, Label::Normal) => self.tn += 1,
            (Label::Rosacea, Label::Normal) => self.fp += 1,
            (Label::Normal, Label::Rosacea) => self.fn_ += 1,
        }
    }
}

impl Add for ConfusionMatrix {
    type Output = ConfusionMatrix;

    fn add(self, o: ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix::new(self.tp + o.tp, self.tn + o.tn, self.fp + o.fp, self.fn_ + o.fn_)
    }
}

impl AddAssign for ConfusionMatrix {
    fn add_assign(&mut self, o: ConfusionMatrix) {
        *self = *self + o;
    }
}

/// Counts `(predicted, truth)` pairs.
pub fn confusion<I>(outcomes: I) -> Result<ConfusionMatrix>
where
    I: IntoIterator<Item = (Label, Label)>,
{
    let mut cm = ConfusionMatrix::default();
    for (p, t) in outcomes {
        cm.record(p, t);
    }
    if cm.total() == 0 {
        return Err(Error::EmptySampleSet);
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    pub accuracy: f64,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
    pub counts: ConfusionMatrix,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(cm: &ConfusionMatrix, method: impl Into<String>) -> Result<MetricsReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptySampleSet);
    }
    let accuracy = (cm.tp + cm.tn) as f64 / total as f64;
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Ok(MetricsReport {
        method: method.into(),
        accuracy,
        recall,
        precision,
        f1,
        counts: *cm,
    })
}

/// Runs `model` over both labelled sample sets and tallies the outcome.
pub fn evaluate<C: Classifier + ?Sized>(
    model: &C,
    x_normal: &Matrix,
    x_rosacea: &Matrix,
) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::default();
    for (x, truth) in [(x_normal, Label::Normal), (x_rosacea, Label::Rosacea)] {
        for p in model.predict_columns(x) {
            cm.record(p?.label, truth);
        }
    }
    if cm.total() == 0 {
        return Err(Error::EmptySampleSet);
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::invalid(format!("unknown format {other:?}"))),
        }
    }
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

fn fmt_opt(v: Option<f64>, decimals: usize, missing: &str) -> String {
    match v {
        Some(v) => format!("{v:.decimals$}"),
        None => missing.to_string(),
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Renders reports in input order. Text uses two decimals, CSV and JSON four.
pub fn render_report(reports: &[MetricsReport], format: ReportFormat) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let mut out = String::new();
    match format {
        ReportFormat::Text => {
            let width = reports
                .iter()
                .map(|r| r.method.chars().count())
                .max()
                .unwrap_or(0)
                .max("Method".len());
            let _ = writeln!(
                out,
                "{:<width$}  {:>8}  {:>6}  {:>9}  {:>4}  {:>5}  {:>5}  {:>5}  {:>5}",
                "Method", "Accuracy", "Recall", "Precision", "F1", "TP", "TN", "FP", "FN"
            );
            for r in reports {
                let c = r.counts;
                let _ = writeln!(
                    out,
                    "{:<width$}  {:>8.2}  {:>6}  {:>9}  {:>4}  {:>5}  {:>5}  {:>5}  {:>5}",
                    r.method,
                    r.accuracy,
                    fmt_opt(r.recall, 2, "n/a"),
                    fmt_opt(r.precision, 2, "n/a"),
                    fmt_opt(r.f1, 2, "n/a"),
                    c.tp,
                    c.tn,
                    c.fp,
                    c.fn_
                );
            }
        }
        ReportFormat::Csv => {
            out.push_str("method,accuracy,recall,precision,f1,tp,tn,fp,fn\n");
            for r in reports {
                let c = r.counts;
                let _ = writeln!(
                    out,
                    "{},{:.4},{},{},{},{},{},{},{}",
                    csv_escape(&r.method),
                    r.accuracy,
                    fmt_opt(r.recall, 4, "NA"),
                    fmt_opt(r.precision, 4, "NA"),
                    fmt_opt(r.f1, 4, "NA"),
                    c.tp,
                    c.tn,
                    c.fp,
                    c.fn_
                );
            }
        }
        ReportFormat::Json => {
            let rows: Vec<serde_json::Value> = reports
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "method": r.method,
                        "accuracy": round4(r.accuracy),
                        "recall": r.recall.map(round4),
                        "precision": r.precision.map(round4),
                        "f1": r.f1.map(round4),
                        "tp": r.counts.tp,
                        "tn": r.counts.tn,
                        "fp": r.counts.fp,
                        "fn": r.counts.fn_,
                    })
                })
                .collect();
            out = serde_json::to_string_pretty(&rows).map_err(|e| Error::invalid(e.to_string()))?;
            out.push('\n');
        }
    }
    Ok(out)
}
