use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{cross_entropy, softmax_rows, EngineError, Model, OptimizerState};
use crate::dataset::DatasetSplit;
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use crate::zoo::HyperparameterConfig;

const PREDICT_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainStatus {
    Completed,
    /// A non-finite loss or activation stopped training early.
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean training loss of each finished epoch.
    pub loss_curve: Vec<f64>,
    pub epochs_run: usize,
    pub wall_time_seconds: f64,
    pub status: TrainStatus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochProgress {
    /// Zero-based.
    pub epoch: usize,
    pub loss: f64,
}

fn epoch_rng(seed: u64, epoch: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(epoch as u64))
}

/// Mini-batch training on `split.train`.
///
/// Each epoch reshuffles with a generator derived from `(config.seed, epoch)`,
/// so the result depends only on the inputs. The final partial batch is kept.
/// Divergence is reported through [`TrainStatus::Diverged`], not as an error.
pub fn train<T: Scalar>(
    model: &mut Model<T>,
    split: &DatasetSplit<T>,
    config: &HyperparameterConfig,
    on_epoch: &mut dyn FnMut(EpochProgress),
) -> Result<TrainReport, EngineError> {
    let started = Instant::now();
    let data = &split.train;
    let n = data.len();
    let batch_size = config.batch_size as usize;
    if batch_size == 0 {
        return Err(EngineError::Dimension("batch size must be positive".into()));
    }
    let mut optimizer = OptimizerState::new(config.optimizer, T::of(config.learning_rate));
    let mut order: Vec<usize> = (0..n).collect();
    let mut loss_curve = Vec::with_capacity(config.epochs as usize);
    let mut status = TrainStatus::Completed;

    'epochs: for epoch in 0..config.epochs as usize {
        order.sort_unstable();
        order.shuffle(&mut epoch_rng(config.seed, epoch));
        let mut total = 0.0;
        for chunk in order.chunks(batch_size) {
            let x = data.features.gather_rows(chunk);
            let y: Vec<usize> = chunk.iter().map(|&i| data.labels[i]).collect();
            let logits = match model.forward(&x) {
                Ok(l) => l,
                Err(EngineError::NumericFailure(_)) => {
                    status = TrainStatus::Diverged;
                    break 'epochs;
                }
                Err(e) => return Err(e),
            };
            let (loss, grad) = cross_entropy(&logits, &y)?;
            let loss = loss.as_f64();
            if !loss.is_finite() {
                status = TrainStatus::Diverged;
                break 'epochs;
            }
            total += loss * chunk.len() as f64;
            let grads = model.backward(grad)?;
            optimizer.apply(&mut model.params_mut(), &grads)?;
        }
        let mean = total / n as f64;
        loss_curve.push(mean);
        on_epoch(EpochProgress { epoch, loss: mean });
    }

    Ok(TrainReport {
        epochs_run: loss_curve.len(),
        loss_curve,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        status,
    })
}

/// Class predictions (argmax, lowest index wins ties) and softmax
/// probabilities for every row of `features`.
pub fn predict<T: Scalar>(model: &mut Model<T>, features: &Tensor<T>) -> Result<(Vec<usize>, Tensor<T>), EngineError> {
    let n = features.batch();
    let k = model.num_classes();
    let mut labels = Vec::with_capacity(n);
    let mut probs = Vec::with_capacity(n * k);
    let indices: Vec<usize> = (0..n).collect();
    for chunk in indices.chunks(PREDICT_CHUNK) {
        let logits = model.forward(&features.gather_rows(chunk))?;
        let p = softmax_rows(&logits);
        for row in p.data().chunks_exact(k) {
            labels.push(argmax(row));
        }
        probs.extend_from_slice(p.data());
    }
    Ok((labels, Tensor::new(vec![n, k], probs)?))
}

fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}
