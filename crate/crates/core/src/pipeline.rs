//! End-to-end search shared by the command line and the HTTP service.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{self, DatasetError, LabeledDataset};
use crate::progress::ProgressSink;
use crate::recommender::{run_search, SearchError, Strategy};
use crate::results::{DatasetInfo, ResultsError, ResultsFile, FORMAT_VERSION};
use crate::scalar::Scalar;
use crate::zoo::SearchSpace;

/// Environment variable naming the directory relative dataset paths are
/// resolved against.
pub const DATA_DIR_ENV: &str = "AUTOCL_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataFormat {
    CifarBinary,
    Csv,
}

impl DataFormat {
    pub fn name(self) -> &'static str {
        match self {
            DataFormat::CifarBinary => "cifar-binary",
            DataFormat::Csv => "csv",
        }
    }
}

impl fmt::Display for DataFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DataFormat {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cifar-binary" => Ok(DataFormat::CifarBinary),
            "csv" => Ok(DataFormat::Csv),
            _ => Err(PipelineError::Validation(format!("unknown format {s:?}, expected cifar-binary or csv"))),
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Results(#[from] ResultsError),
}

impl PipelineError {
    /// Bad input, as opposed to a failure while processing valid input.
    pub fn is_validation(&self) -> bool {
        match self {
            PipelineError::Validation(_) => true,
            PipelineError::Dataset(e) => !matches!(e, DatasetError::Io { .. }),
            PipelineError::Search(e) => matches!(e, SearchError::Validation(_)),
            PipelineError::Results(e) => !matches!(e, ResultsError::Io(_)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchRequest {
    pub data: PathBuf,
    pub format: DataFormat,
    /// CSV column holding the class label.
    pub label_column: String,
    pub budget: usize,
    pub strategy: Strategy,
    pub seed: u64,
    pub test_fraction: f64,
    /// Stratified subsample of this many samples before splitting.
    pub subset: Option<usize>,
    /// Exactly this many samples of every class before splitting; excludes `subset`.
    pub per_class: Option<usize>,
    pub record_timing: bool,
}

impl SearchRequest {
    pub const DEFAULT_SEED: u64 = 42;
    pub const DEFAULT_TEST_FRACTION: f64 = 0.2;
    pub const DEFAULT_LABEL_COLUMN: &'static str = "label";

    pub fn new(data: impl Into<PathBuf>, format: DataFormat, budget: usize, strategy: Strategy) -> Self {
        Self {
            data: data.into(),
            format,
            label_column: Self::DEFAULT_LABEL_COLUMN.into(),
            budget,
            strategy,
            seed: Self::DEFAULT_SEED,
            test_fraction: Self::DEFAULT_TEST_FRACTION,
            subset: None,
            per_class: None,
            record_timing: false,
        }
    }
}

/// Resolves a relative `path` against `$AUTOCL_DATA_DIR` when that variable is
/// set; absolute paths are returned unchanged.
pub fn resolve_data_path(path: &Path) -> PathBuf {
    match std::env::var_os(DATA_DIR_ENV) {
        Some(root) if path.is_relative() && !root.is_empty() => Path::new(&root).join(path),
        _ => path.to_path_buf(),
    }
}

pub fn load_dataset<T: Scalar>(
    path: &Path,
    format: DataFormat,
    label_column: &str,
) -> Result<LabeledDataset<T>, DatasetError> {
    match format {
        DataFormat::CifarBinary => dataset::load_cifar_binary(path),
        DataFormat::Csv => dataset::load_csv(path, label_column),
    }
}

/// Loads, splits and normalizes the data, runs the search and assembles the
/// results document. `request.data` is used as given.
pub fn run_pipeline<T: Scalar>(
    request: &SearchRequest,
    sink: &mut dyn ProgressSink,
) -> Result<ResultsFile, PipelineError> {
    if request.budget == 0 {
        return Err(PipelineError::Validation("budget must be at least 1".into()));
    }
    if !(request.test_fraction > 0.0 && request.test_fraction < 1.0) {
        return Err(PipelineError::Validation(format!(
            "test fraction {} must lie strictly between 0 and 1",
            request.test_fraction
        )));
    }
    if request.subset.is_some() && request.per_class.is_some() {
        return Err(PipelineError::Validation("subset and per-class subsampling are mutually exclusive".into()));
    }
    let mut data = load_dataset::<T>(&request.data, request.format, &request.label_column)?;
    if let Some(n) = request.subset {
        data = dataset::stratified_subsample(&data, n, request.seed)?;
    }
    if let Some(n) = request.per_class {
        data = dataset::balanced_subsample(&data, n, request.seed)?;
    }
    let split = dataset::normalize(dataset::stratified_split(&data, request.test_fraction, request.seed)?);
    let space = SearchSpace::for_input_shape(split.input_shape());
    let outcome =
        run_search(&split, &space, request.budget, request.strategy, request.seed, request.record_timing, sink)?;
    let results = ResultsFile {
        format_version: FORMAT_VERSION.into(),
        dataset: DatasetInfo {
            name: data.name.clone(),
            num_classes: split.num_classes(),
            class_names: data.class_names.clone(),
            input_shape: split.input_shape().to_vec(),
            train_size: split.train.len(),
            test_size: split.test.len(),
        },
        space,
        strategy: outcome.strategy,
        budget: outcome.budget,
        runs: outcome.runs,
        recommendation: outcome.recommendation,
    }
    .canonicalized();
    results.validate()?;
    Ok(results)
}
