//! Small CPU neural-network engine: layers with hand-written backward passes,
//! softmax cross-entropy, first-order optimizers and the training loop.

mod layers;
mod loss;
mod model;
mod optim;
mod train;

pub use layers::{Conv2d, Dense, Flatten, Init, Layer, LayerKind, MaxPool2d, Relu, Softmax};
pub use loss::{cross_entropy, softmax_rows};
pub use model::Model;
pub use optim::{OptimizerKind, OptimizerState, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON, MOMENTUM};
pub use train::{predict, train, EpochProgress, TrainReport, TrainStatus};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error("index error: {0}")]
    Index(String),
}
