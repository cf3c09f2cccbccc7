//! Confusion matrix and one-vs-rest class metrics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("validation error: {0}")]
    Validation(String),
}

/// The four metrics exposed externally, under exactly these names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Accuracy,
    Precision,
    Sensitivity,
    Specificity,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Accuracy, Metric::Precision, Metric::Sensitivity, Metric::Specificity];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Precision => "precision",
            Metric::Sensitivity => "sensitivity",
            Metric::Specificity => "specificity",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            MetricsError::Validation(format!(
                "unknown metric {s:?} (expected accuracy, precision, sensitivity or specificity)"
            ))
        })
    }
}

/// `counts[t][p]`: samples of true class `t` predicted as `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
    pub class_names: Vec<String>,
}

impl ConfusionMatrix {
    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes()).map(|k| self.counts[k][k]).sum()
    }

    pub fn row_sum(&self, k: usize) -> u64 {
        self.counts[k].iter().sum()
    }

    pub fn column_sum(&self, k: usize) -> u64 {
        self.counts.iter().map(|r| r[k]).sum()
    }
}

/// One-vs-rest counts for a single class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BinaryCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl BinaryCounts {
    pub fn of(cm: &ConfusionMatrix, k: usize) -> Self {
        let tp = cm.counts[k][k];
        let fn_ = cm.row_sum(k) - tp;
        let fp = cm.column_sum(k) - tp;
        let tn = cm.total() - tp - fn_ - fp;
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn sensitivity(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> f64 {
        ratio(self.tn, self.tn + self.fp)
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }
}

/// `num / den`, with 0/0 defined as 0.
pub fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassMetrics {
    pub class_index: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub support: u64,
}

impl ClassMetrics {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Accuracy => self.accuracy,
            Metric::Precision => self.precision,
            Metric::Sensitivity => self.sensitivity,
            Metric::Specificity => self.specificity,
        }
    }
}

/// Overall accuracy plus unweighted class means of the other three metrics.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverallMetrics {
    pub accuracy: f64,
    #[serde(rename = "precision")]
    pub macro_precision: f64,
    #[serde(rename = "sensitivity")]
    pub macro_sensitivity: f64,
    #[serde(rename = "specificity")]
    pub macro_specificity: f64,
}

impl OverallMetrics {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Accuracy => self.accuracy,
            Metric::Precision => self.macro_precision,
            Metric::Sensitivity => self.macro_sensitivity,
            Metric::Specificity => self.macro_specificity,
        }
    }
}

pub fn confusion_matrix(
    predicted: &[usize],
    truth: &[usize],
    class_names: &[String],
) -> Result<ConfusionMatrix, MetricsError> {
    let k = class_names.len();
    if predicted.len() != truth.len() {
        return Err(MetricsError::Validation(format!(
            "{} predictions but {} ground-truth labels",
            predicted.len(),
            truth.len()
        )));
    }
    if predicted.is_empty() {
        return Err(MetricsError::Validation("no samples to evaluate".into()));
    }
    let mut counts = vec![vec![0u64; k]; k];
    for (i, (&p, &t)) in predicted.iter().zip(truth).enumerate() {
        if p >= k || t >= k {
            return Err(MetricsError::Validation(format!("sample {i}: class outside [0, {k})")));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { counts, class_names: class_names.to_vec() })
}

/// Confusion matrix for anonymous classes `0..k`.
pub fn confusion_matrix_k(predicted: &[usize], truth: &[usize], k: usize) -> Result<ConfusionMatrix, MetricsError> {
    let names: Vec<String> = (0..k).map(|c| c.to_string()).collect();
    confusion_matrix(predicted, truth, &names)
}

pub fn per_class_metrics(cm: &ConfusionMatrix) -> Vec<ClassMetrics> {
    (0..cm.num_classes())
        .map(|k| {
            let c = BinaryCounts::of(cm, k);
            ClassMetrics {
                class_index: k,
                accuracy: c.accuracy(),
                precision: c.precision(),
                sensitivity: c.sensitivity(),
                specificity: c.specificity(),
                support: cm.row_sum(k),
            }
        })
        .collect()
}

pub fn overall_metrics(cm: &ConfusionMatrix) -> OverallMetrics {
    overall_from(cm, &per_class_metrics(cm))
}

pub(crate) fn overall_from(cm: &ConfusionMatrix, per_class: &[ClassMetrics]) -> OverallMetrics {
    let k = per_class.len().max(1) as f64;
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / k;
    OverallMetrics {
        accuracy: ratio(cm.trace(), cm.total()),
        macro_precision: mean(|m| m.precision),
        macro_sensitivity: mean(|m| m.sensitivity),
        macro_specificity: mean(|m| m.specificity),
    }
}
