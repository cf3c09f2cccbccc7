//! The versioned JSON results document.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::{ClassMetrics, Metric, OverallMetrics};
use crate::recommender::{rank_runs, Scope, Strategy};
use crate::zoo::{self, HyperparameterConfig, SearchSpace};

pub const FORMAT_VERSION: &str = "1";

/// Significant digits kept for every float written to a results file.
pub const SIGNIFICANT_DIGITS: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResultsError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("malformed results document: {0}")]
    Parse(String),
    #[error("unsupported format_version {0:?}, expected \"{FORMAT_VERSION}\"")]
    UnsupportedVersion(String),
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("range error at {path}: {value} outside [0, 1]")]
    Range { path: String, value: f64 },
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> ResultsError {
    ResultsError::Schema { path: path.into(), message: message.into() }
}

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn quantize(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Completed,
    /// Diverged or could not be built; scored as 0.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub run_id: String,
    pub config: HyperparameterConfig,
    pub parameter_count: u64,
    pub status: RunStatus,
    pub overall: OverallMetrics,
    pub per_class: Vec<ClassMetrics>,
    pub loss_curve: Vec<f64>,
    pub wall_time_seconds: f64,
    /// 1-based position in the recommendation.
    pub rank: usize,
}

impl RunRecord {
    pub fn run_id_for(run_index: usize) -> String {
        format!("run-{:04}", run_index + 1)
    }

    /// Value used for ranking: the overall or per-class metric, 0 when failed.
    pub fn metric(&self, metric: Metric, scope: Scope) -> f64 {
        if self.status == RunStatus::Failed {
            return 0.0;
        }
        match scope {
            Scope::Overall => self.overall.get(metric),
            Scope::Class(k) => self.per_class.get(k).map_or(0.0, |m| m.get(metric)),
        }
    }

    pub fn canonicalize(&mut self) {
        let o = &mut self.overall;
        for v in [&mut o.accuracy, &mut o.macro_precision, &mut o.macro_sensitivity, &mut o.macro_specificity] {
            *v = quantize(*v);
        }
        for c in &mut self.per_class {
            for v in [&mut c.accuracy, &mut c.precision, &mut c.sensitivity, &mut c.specificity] {
                *v = quantize(*v);
            }
        }
        self.loss_curve.iter_mut().for_each(|v| *v = quantize(*v));
        self.wall_time_seconds = quantize(self.wall_time_seconds);
        self.config.learning_rate = quantize(self.config.learning_rate);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetInfo {
    pub name: String,
    pub num_classes: usize,
    pub class_names: Vec<String>,
    /// Per-sample shape, e.g. `[3, 32, 32]`.
    pub input_shape: Vec<usize>,
    pub train_size: usize,
    pub test_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Recommendation {
    /// Run ids, best first.
    pub ranked: Vec<String>,
    pub best: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultsFile {
    pub format_version: String,
    pub dataset: DatasetInfo,
    pub space: SearchSpace,
    pub strategy: Strategy,
    pub budget: usize,
    /// In rank order.
    pub runs: Vec<RunRecord>,
    pub recommendation: Recommendation,
}

impl ResultsFile {
    pub fn run(&self, run_id: &str) -> Option<&RunRecord> {
        self.runs.iter().find(|r| r.run_id == run_id)
    }

    pub fn best(&self) -> Option<&RunRecord> {
        self.run(&self.recommendation.best)
    }

    /// Rounds every float to the precision it is stored with.
    pub fn canonicalize(&mut self) {
        self.runs.iter_mut().for_each(RunRecord::canonicalize);
        self.space.learning_rate.min = quantize(self.space.learning_rate.min);
        self.space.learning_rate.max = quantize(self.space.learning_rate.max);
    }

    pub fn canonicalized(&self) -> Self {
        let mut c = self.clone();
        c.canonicalize();
        c
    }

    pub fn validate(&self) -> Result<(), ResultsError> {
        validate(self)
    }

    /// Pretty JSON of the canonical form, newline terminated.
    pub fn to_json(&self) -> Result<String, ResultsError> {
        let c = self.canonicalized();
        validate(&c)?;
        let mut s = serde_json::to_string_pretty(&c).map_err(|e| ResultsError::Parse(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, ResultsError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ResultsError::Parse(e.to_string()))?;
        match value.get("format_version") {
            Some(serde_json::Value::String(v)) if v == FORMAT_VERSION => {}
            Some(serde_json::Value::String(v)) => return Err(ResultsError::UnsupportedVersion(v.clone())),
            Some(other) => return Err(ResultsError::UnsupportedVersion(other.to_string())),
            None => return Err(schema("format_version", "missing")),
        }
        let file: Self = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            schema(if path == "." { "$".to_string() } else { path }, e.into_inner().to_string())
        })?;
        validate(&file)?;
        Ok(file)
    }

    /// Writes to a sibling temporary file and renames it into place, so
    /// readers never observe a partial document.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ResultsError> {
        let path = path.as_ref();
        let json = self.to_json()?;
        let io = |e: std::io::Error| ResultsError::Io(format!("{}: {e}", path.display()));
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io)?;
        }
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(format!(".tmp-{}", std::process::id()));
        fs::write(&tmp, json).map_err(io)?;
        fs::rename(&tmp, path).map_err(|e| {
            let _ = fs::remove_file(&tmp);
            io(e)
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ResultsError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| ResultsError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

fn check_unit(path: String, v: f64) -> Result<(), ResultsError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(ResultsError::Range { path, value: v })
    }
}

fn valid_run_id(id: &str) -> bool {
    id.strip_prefix("run-").is_some_and(|d| d.len() >= 4 && d.bytes().all(|b| b.is_ascii_digit()))
}

/// Checks every cross-field invariant of a parsed document.
pub fn validate(f: &ResultsFile) -> Result<(), ResultsError> {
    if f.format_version != FORMAT_VERSION {
        return Err(ResultsError::UnsupportedVersion(f.format_version.clone()));
    }
    let d = &f.dataset;
    if d.num_classes < 2 {
        return Err(schema("dataset.num_classes", "at least 2 classes required"));
    }
    if d.class_names.len() != d.num_classes {
        return Err(schema(
            "dataset.class_names",
            format!("{} names for {} classes", d.class_names.len(), d.num_classes),
        ));
    }
    if d.input_shape.is_empty() || d.input_shape.contains(&0) {
        return Err(schema("dataset.input_shape", "must be non-empty with positive extents"));
    }
    if d.train_size == 0 || d.test_size == 0 {
        return Err(schema("dataset", "train_size and test_size must be positive"));
    }
    let space_errors = f.space.check();
    if !space_errors.is_empty() {
        return Err(schema("space", space_errors.join("; ")));
    }
    if f.budget == 0 {
        return Err(schema("budget", "must be at least 1"));
    }
    if f.runs.is_empty() || f.runs.len() > f.budget {
        return Err(schema("runs", format!("{} runs for budget {}", f.runs.len(), f.budget)));
    }

    let mut ids = HashSet::new();
    for (i, r) in f.runs.iter().enumerate() {
        let at = |field: &str| format!("runs[{i}].{field}");
        if !valid_run_id(&r.run_id) {
            return Err(schema(at("run_id"), format!("{:?} is not of the form run-NNNN", r.run_id)));
        }
        if !ids.insert(r.run_id.as_str()) {
            return Err(schema(at("run_id"), format!("duplicate run id {:?}", r.run_id)));
        }
        if r.rank != i + 1 {
            return Err(schema(at("rank"), format!("rank {} at position {}, runs must be in rank order", r.rank, i)));
        }
        let violations = zoo::validate(&r.config);
        if !violations.is_empty() {
            return Err(schema(at("config"), violations.join("; ")));
        }
        if !f.space.contains(&r.config) {
            return Err(schema(at("config"), "outside the declared search space"));
        }
        if r.loss_curve.len() > r.config.epochs as usize {
            return Err(schema(at("loss_curve"), "more entries than epochs"));
        }
        if let Some(j) = r.loss_curve.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(schema(format!("runs[{i}].loss_curve[{j}]"), "loss must be finite and non-negative"));
        }
        if r.wall_time_seconds.is_nan() || r.wall_time_seconds < 0.0 {
            return Err(schema(at("wall_time_seconds"), "must be non-negative"));
        }
        let o = &r.overall;
        for (name, v) in [
            ("accuracy", o.accuracy),
            ("precision", o.macro_precision),
            ("sensitivity", o.macro_sensitivity),
            ("specificity", o.macro_specificity),
        ] {
            check_unit(format!("runs[{i}].overall.{name}"), v)?;
        }
        for (j, c) in r.per_class.iter().enumerate() {
            for metric in Metric::ALL {
                check_unit(format!("runs[{i}].per_class[{j}].{metric}"), c.get(metric))?;
            }
        }
        match r.status {
            RunStatus::Completed => {
                if r.parameter_count == 0 {
                    return Err(schema(at("parameter_count"), "completed run without parameters"));
                }
                if r.loss_curve.len() != r.config.epochs as usize {
                    return Err(schema(at("loss_curve"), "completed run must record one loss per epoch"));
                }
                if r.per_class.len() != d.num_classes {
                    return Err(schema(
                        at("per_class"),
                        format!("{} entries for {} classes", r.per_class.len(), d.num_classes),
                    ));
                }
                for (j, c) in r.per_class.iter().enumerate() {
                    if c.class_index != j {
                        return Err(schema(format!("runs[{i}].per_class[{j}].class_index"), "out of order"));
                    }
                }
                let support: u64 = r.per_class.iter().map(|c| c.support).sum();
                if support != d.test_size as u64 {
                    return Err(schema(
                        at("per_class"),
                        format!("support sums to {support}, test_size is {}", d.test_size),
                    ));
                }
            }
            RunStatus::Failed => {
                if !r.per_class.is_empty() {
                    return Err(schema(at("per_class"), "failed run must not carry per-class metrics"));
                }
                if *o != OverallMetrics::default() {
                    return Err(schema(at("overall"), "failed run must score 0"));
                }
            }
        }
    }

    let rec = &f.recommendation;
    if rec.ranked.len() != f.runs.len() {
        return Err(schema("recommendation.ranked", format!("{} ids for {} runs", rec.ranked.len(), f.runs.len())));
    }
    for (i, id) in rec.ranked.iter().enumerate() {
        if !ids.contains(id.as_str()) {
            return Err(schema(format!("recommendation.ranked[{i}]"), format!("unknown run id {id:?}")));
        }
        if f.runs[i].run_id != *id {
            return Err(schema(format!("recommendation.ranked[{i}]"), format!("{id:?} does not hold rank {}", i + 1)));
        }
    }
    if rec.best != rec.ranked[0] {
        return Err(schema("recommendation.best", "must equal the first ranked run"));
    }
    let expected = rank_runs(&f.runs, Metric::Accuracy, Scope::Overall).map_err(|e| schema("runs", e.to_string()))?;
    if let Some(i) = expected.iter().zip(&rec.ranked).position(|(e, id)| e.run.run_id != *id) {
        return Err(schema(
            format!("recommendation.ranked[{i}]"),
            format!("expected {:?} by overall accuracy", expected[i].run.run_id),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_keeps_six_digits() {
        assert_eq!(quantize(0.123_456_789), 0.123_457);
        assert_eq!(quantize(1.0 / 3.0), 0.333_333);
        assert_eq!(quantize(1.234_567_89), 1.234_57);
        assert_eq!(quantize(0.000_123_456_7), 0.000_123_457);
        assert_eq!(quantize(0.0), 0.0);
        assert_eq!(quantize(quantize(0.987_654_321)), quantize(0.987_654_321));
    }

    #[test]
    fn run_ids() {
        assert_eq!(RunRecord::run_id_for(0), "run-0001");
        assert!(valid_run_id("run-0042"));
        assert!(valid_run_id("run-12345"));
        assert!(!valid_run_id("run-42"));
        assert!(!valid_run_id("job-0001"));
    }
}
