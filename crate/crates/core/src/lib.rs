//! Classifier-zoo training, class-level evaluation and hyperparameter
//! recommendation.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision for common use.

pub mod dataset;
pub mod evaluation;
pub mod nn;
pub mod pipeline;
pub mod progress;
pub mod recommender;
pub mod results;
pub mod scalar;
pub mod tensor;
pub mod zoo;

pub use dataset::{DatasetError, DatasetSplit, LabeledDataset, NormalizationStats};
pub use evaluation::{ClassMetrics, ConfusionMatrix, Metric, MetricsError, OverallMetrics};
pub use nn::{EngineError, Model, OptimizerKind};
pub use pipeline::{run_pipeline, DataFormat, PipelineError, SearchRequest};
pub use progress::{NoProgress, ProgressEvent, ProgressSink};
pub use recommender::{rank_runs, Scope, SearchError, Strategy};
pub use results::{ResultsError, ResultsFile, RunRecord, RunStatus};
pub use scalar::Scalar;
pub use tensor::Tensor;
pub use zoo::{HyperparameterConfig, SearchSpace, Template, ZooError};

pub type Tensor32 = Tensor<f32>;
pub type Tensor64 = Tensor<f64>;
pub type Model32 = Model<f32>;
pub type Model64 = Model<f64>;
pub type Dataset32 = LabeledDataset<f32>;
pub type Dataset64 = LabeledDataset<f64>;
pub type Split32 = DatasetSplit<f32>;
pub type Split64 = DatasetSplit<f64>;
